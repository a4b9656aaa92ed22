//! Bit-exact transcript encoding.
//!
//! A round is a 16-bit round index and a 32-bit client count, followed by
//! each report's slots: `⌈log₂ D⌉` coordinate bits then one sign bit, all
//! big-endian and packed without padding until the final byte.

use super::SqkrReport;
use crate::{Error, Result};

pub const HEADER_BITS: u64 = 48;

/// `⌈log₂ dim⌉`.
pub fn coord_bits(dim: usize) -> u32 {
    dim.next_power_of_two().trailing_zeros()
}

/// Serialized size of one report, header excluded.
pub fn report_bits(dim: usize, b0: usize) -> u64 {
    b0 as u64 * (coord_bits(dim) as u64 + 1)
}

#[derive(Default)]
struct BitWriter {
    bytes: Vec<u8>,
    len: u64,
}

impl BitWriter {
    fn push(&mut self, value: u64, width: u32) {
        for k in (0..width).rev() {
            if self.len.is_multiple_of(8) {
                self.bytes.push(0);
            }
            if value >> k & 1 == 1 {
                let last = self.bytes.last_mut().expect("byte pushed above");
                *last |= 0x80 >> (self.len % 8);
            }
            self.len += 1;
        }
    }
}

struct BitReader<'a> {
    bytes: &'a [u8],
    pos: u64,
}

impl BitReader<'_> {
    fn take(&mut self, width: u32) -> Result<u64> {
        let mut v = 0;
        for _ in 0..width {
            let byte = *self
                .bytes
                .get((self.pos / 8) as usize)
                .ok_or_else(|| Error::Protocol("transcript truncated".into()))?;
            v = v << 1 | u64::from(byte >> (7 - self.pos % 8) & 1);
            self.pos += 1;
        }
        Ok(v)
    }
}

/// Encode one round; returns the bytes and the exact bit length.
pub fn encode_round(round: u16, reports: &[SqkrReport], dim: usize) -> Result<(Vec<u8>, u64)> {
    let count =
        u32::try_from(reports.len()).map_err(|_| Error::Protocol("too many clients".into()))?;
    let width = coord_bits(dim);
    let mut w = BitWriter::default();
    w.push(round.into(), 16);
    w.push(count.into(), 32);
    for r in reports {
        for (&j, &s) in r.coords.iter().zip(&r.signs) {
            if j as usize >= dim {
                return Err(Error::Protocol(format!(
                    "coordinate {j} outside [0, {dim})"
                )));
            }
            w.push(j.into(), width);
            w.push(s.into(), 1);
        }
    }
    Ok((w.bytes, w.len))
}

/// Inverse of [`encode_round`] for reports of `b0` slots each.
pub fn decode_round(bytes: &[u8], dim: usize, b0: usize) -> Result<(u16, Vec<SqkrReport>)> {
    let width = coord_bits(dim);
    let mut r = BitReader { bytes, pos: 0 };
    let round = r.take(16)? as u16;
    let count = r.take(32)? as usize;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut rep = SqkrReport {
            coords: Vec::with_capacity(b0),
            signs: Vec::with_capacity(b0),
        };
        for _ in 0..b0 {
            let j = r.take(width)?;
            if j as usize >= dim {
                return Err(Error::Protocol(format!(
                    "coordinate {j} outside [0, {dim})"
                )));
            }
            rep.coords.push(j as u32);
            rep.signs.push(r.take(1)? == 1);
        }
        out.push(rep);
    }
    Ok((round, out))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes() {
        assert_eq!(coord_bits(1024), 10);
        assert_eq!(coord_bits(1000), 10);
        assert_eq!(coord_bits(1), 0);
        assert_eq!(report_bits(1024, 1), 11);
        assert_eq!(report_bits(16, 3), 15);
    }

    #[test]
    fn golden_bytes() {
        let reports = vec![
            SqkrReport {
                coords: vec![5],
                signs: vec![true],
            },
            SqkrReport {
                coords: vec![2],
                signs: vec![false],
            },
        ];
        let (bytes, bits) = encode_round(1, &reports, 8).unwrap();
        assert_eq!(bits, 48 + 8);
        // 0x0001, 0x00000002, then 101 1 | 010 0.
        assert_eq!(bytes, vec![0x00, 0x01, 0x00, 0x00, 0x00, 0x02, 0b1011_0100]);
    }

    #[test]
    fn round_trip() {
        let reports: Vec<SqkrReport> = (0..13)
            .map(|i| SqkrReport {
                coords: vec![i * 7 % 100, i],
                signs: vec![i % 2 == 0, i % 3 == 0],
            })
            .collect();
        let (bytes, bits) = encode_round(9, &reports, 100).unwrap();
        assert_eq!(bits, HEADER_BITS + 13 * report_bits(100, 2));
        assert_eq!(decode_round(&bytes, 100, 2).unwrap(), (9, reports));
        assert!(decode_round(&bytes[..bytes.len() - 2], 100, 2).is_err());
    }
}
