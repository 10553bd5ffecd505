//! Thermometer decoding, fold/flash code assembly and gray coding.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use thiserror::Error;

use crate::comparator::FLASH_COMPARATORS;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DigitalError {
    #[error("residual bubble in thermometer word {0}")]
    ResidualBubble(ThermometerWord),
    #[error("value {0} out of range")]
    OutOfRange(u32),
    #[error("malformed thermometer word {0:?}")]
    Malformed(String),
    #[error("code csv: {0}")]
    Io(String),
}

/// Outputs of the flash comparators, index 0 holding the lowest trip point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ThermometerWord {
    pub bits: [bool; FLASH_COMPARATORS],
}

impl ThermometerWord {
    pub const fn new(bits: [bool; FLASH_COMPARATORS]) -> Self {
        Self { bits }
    }

    /// Word whose bit `i` is bit `i` of `mask`.
    pub fn from_mask(mask: u8) -> Self {
        let mut bits = [false; FLASH_COMPARATORS];
        for (i, b) in bits.iter_mut().enumerate() {
            *b = mask >> i & 1 == 1;
        }
        Self { bits }
    }

    /// Clean words have their ones as a prefix.
    pub fn is_clean(&self) -> bool {
        self.bits.windows(2).all(|p| p[0] >= p[1])
    }

    pub fn ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Clean word with `count` leading ones.
    pub fn clean(count: usize) -> Self {
        let mut bits = [false; FLASH_COMPARATORS];
        bits.iter_mut().take(count).for_each(|b| *b = true);
        Self { bits }
    }
}

impl fmt::Display for ThermometerWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for ThermometerWord {
    type Err = DigitalError;

    /// Parses `"1110000"`, index 0 first.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let chars: Vec<char> = s.chars().collect();
        if chars.len() != FLASH_COMPARATORS {
            return Err(DigitalError::Malformed(s.to_owned()));
        }
        let mut bits = [false; FLASH_COMPARATORS];
        for (b, c) in bits.iter_mut().zip(chars) {
            *b = match c {
                '1' => true,
                '0' => false,
                _ => return Err(DigitalError::Malformed(s.to_owned())),
            };
        }
        Ok(Self { bits })
    }
}

/// 4-bit converter output carried both as binary and gray.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AdcCode {
    pub value: u8,
    /// MSB first.
    pub gray: [bool; 4],
}

impl AdcCode {
    pub fn gray_string(&self) -> String {
        self.gray.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }
}

/// One majority-of-three pass, padded with a 1 below index 0 and a 0 above index 6.
pub fn majority_pass(raw: &ThermometerWord) -> ThermometerWord {
    let b = &raw.bits;
    let at = |i: isize| -> bool {
        if i < 0 {
            true
        } else if i as usize >= FLASH_COMPARATORS {
            false
        } else {
            b[i as usize]
        }
    };
    let mut out = [false; FLASH_COMPARATORS];
    for (i, o) in out.iter_mut().enumerate() {
        let i = i as isize;
        let votes = u8::from(at(i - 1)) + u8::from(at(i)) + u8::from(at(i + 1));
        *o = votes >= 2;
    }
    ThermometerWord { bits: out }
}

/// First-order bubble correction.
///
/// Applies majority-of-three passes until the word stops changing. Clean
/// words and words with isolated single bubbles settle after one pass;
/// denser bubble patterns may need a few more and can still end unclean,
/// which [`therm_to_count`] reports as a residual bubble.
pub fn bubble_correct(raw: &ThermometerWord) -> ThermometerWord {
    let mut word = *raw;
    loop {
        let next = majority_pass(&word);
        if next == word {
            return word;
        }
        word = next;
    }
}

pub fn therm_to_count(clean: &ThermometerWord) -> Result<usize, DigitalError> {
    if clean.is_clean() {
        Ok(clean.ones())
    } else {
        Err(DigitalError::ResidualBubble(*clean))
    }
}

/// Combines the fold MSB with the flash count into a code monotone in the input.
pub fn assemble_code(sign_bit: u8, count: usize) -> Result<AdcCode, DigitalError> {
    if count > FLASH_COMPARATORS || sign_bit > 1 {
        return Err(DigitalError::OutOfRange(count as u32));
    }
    let value = if sign_bit == 1 { 8 + count as u8 } else { 7 - count as u8 };
    Ok(AdcCode { value, gray: bin_to_gray(value)? })
}

pub fn bin_to_gray(value: u8) -> Result<[bool; 4], DigitalError> {
    if value > 15 {
        return Err(DigitalError::OutOfRange(value.into()));
    }
    let g = value ^ (value >> 1);
    Ok([g >> 3 & 1 == 1, g >> 2 & 1 == 1, g >> 1 & 1 == 1, g & 1 == 1])
}

pub fn gray_to_bin(gray: [bool; 4]) -> u8 {
    let mut value = 0u8;
    let mut acc = false;
    for g in gray {
        acc ^= g;
        value = value << 1 | u8::from(acc);
    }
    value
}

/// Reference 16-level mid-rise quantizer, evaluated by scanning all fifteen
/// thresholds `(j - 8) * lsb`, `j = 1..=15`, with `lsb = full_scale / 16`.
///
/// A value sitting exactly on a threshold resolves toward zero: on the
/// positive side the comparison is strict, at or below zero it is not, and
/// the zero threshold itself is skipped so `0` maps to code 7.
pub fn oracle_quantize(v_diff: f64, full_scale: f64) -> u8 {
    let lsb = full_scale / 16.0;
    let mut code = 0u8;
    for j in 1..=15i32 {
        let threshold = f64::from(j - 8) * lsb;
        let above = if v_diff > 0.0 { v_diff > threshold } else { j != 8 && v_diff >= threshold };
        if above {
            code += 1;
        }
    }
    code
}

/// Writes a code stream as `index,value,gray_bits` CSV.
pub fn write_codes_csv<W: Write>(codes: &[AdcCode], mut out: W) -> Result<(), DigitalError> {
    let io = |e: std::io::Error| DigitalError::Io(e.to_string());
    writeln!(out, "index,value,gray_bits").map_err(io)?;
    for (i, c) in codes.iter().enumerate() {
        writeln!(out, "{i},{},{}", c.value, c.gray_string()).map_err(io)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> ThermometerWord {
        s.parse().unwrap()
    }

    #[test]
    fn bubble_correct_examples() {
        assert_eq!(bubble_correct(&w("1110000")), w("1110000"));
        assert_eq!(bubble_correct(&w("1101000")), w("1110000"));
        assert_eq!(bubble_correct(&w("0000000")), w("0000000"));
        assert_eq!(bubble_correct(&w("1111111")), w("1111111"));
        assert_eq!(majority_pass(&w("1101000")), w("1110000"));
    }

    #[test]
    fn bubble_correct_is_idempotent_exhaustive() {
        for mask in 0..128u8 {
            let once = bubble_correct(&ThermometerWord::from_mask(mask));
            assert_eq!(bubble_correct(&once), once, "word {}", ThermometerWord::from_mask(mask));
        }
    }

    #[test]
    fn single_pass_is_not_idempotent_on_alternating_words() {
        let once = majority_pass(&w("0101010"));
        assert_ne!(majority_pass(&once), once);
    }

    /// Positions whose bit differs from both padded neighbors.
    fn isolated_bits(word: &ThermometerWord) -> Vec<usize> {
        let at = |i: isize| match i {
            i if i < 0 => true,
            i if i as usize >= FLASH_COMPARATORS => false,
            i => word.bits[i as usize],
        };
        (0..FLASH_COMPARATORS)
            .filter(|&i| {
                let b = word.bits[i];
                at(i as isize - 1) != b && at(i as isize + 1) != b
            })
            .collect()
    }

    #[test]
    fn single_bubbles_repaired_exhaustive() {
        let mut checked = 0;
        for mask in 0..128u8 {
            let raw = ThermometerWord::from_mask(mask);
            let isolated = isolated_bits(&raw);
            if raw.is_clean() || isolated.len() != 1 {
                continue;
            }
            let mut expect = raw;
            expect.bits[isolated[0]] = !expect.bits[isolated[0]];
            if !expect.is_clean() {
                continue;
            }
            assert_eq!(majority_pass(&raw), expect, "raw {raw}");
            assert_eq!(bubble_correct(&raw), expect, "raw {raw}");
            checked += 1;
        }
        assert!(checked >= 30, "{checked}");
    }

    #[test]
    fn therm_to_count_examples() {
        assert_eq!(therm_to_count(&w("0000000")), Ok(0));
        assert_eq!(therm_to_count(&w("1110000")), Ok(3));
        assert_eq!(therm_to_count(&w("1111111")), Ok(7));
        assert_eq!(therm_to_count(&w("1010000")), Err(DigitalError::ResidualBubble(w("1010000"))));
    }

    #[test]
    fn assemble_code_examples() {
        assert_eq!(assemble_code(1, 7).unwrap().value, 15);
        assert_eq!(assemble_code(0, 7).unwrap().value, 0);
        assert_eq!(assemble_code(0, 0).unwrap().value, 7);
        assert_eq!(assemble_code(1, 0).unwrap().value, 8);
        assert!(assemble_code(1, 8).is_err());
    }

    #[test]
    fn gray_examples() {
        assert_eq!(bin_to_gray(0).unwrap(), [false; 4]);
        assert_eq!(bin_to_gray(15).unwrap(), [true, false, false, false]);
        assert_eq!(bin_to_gray(7).unwrap(), [false, true, false, false]);
        assert_eq!(bin_to_gray(8).unwrap(), [true, true, false, false]);
        assert!(bin_to_gray(16).is_err());
    }

    #[test]
    fn gray_round_trip_and_adjacency_exhaustive() {
        for v in 0..16u8 {
            assert_eq!(gray_to_bin(bin_to_gray(v).unwrap()), v);
        }
        for v in 0..15u8 {
            let a = bin_to_gray(v).unwrap();
            let b = bin_to_gray(v + 1).unwrap();
            assert_eq!(a.iter().zip(&b).filter(|(x, y)| x != y).count(), 1, "{v}->{}", v + 1);
        }
    }

    #[test]
    fn oracle_examples() {
        let fs = 0.5;
        assert_eq!(oracle_quantize(-1e-12, fs), 7);
        assert_eq!(oracle_quantize(0.0, fs), 7);
        assert_eq!(oracle_quantize(1e-12, fs), 8);
        assert_eq!(oracle_quantize(0.25, fs), 15);
        assert_eq!(oracle_quantize(-0.25, fs), 0);
        assert_eq!(oracle_quantize(1.0, fs), 15);
        assert_eq!(oracle_quantize(-1.0, fs), 0);
        // exactly on a positive threshold stays below it, on a negative one stays above it
        assert_eq!(oracle_quantize(0.03125, fs), 8);
        assert_eq!(oracle_quantize(-0.03125, fs), 7);
        assert_eq!(oracle_quantize(0.0312501, fs), 9);
    }

    #[test]
    fn code_csv_format() {
        let codes = [assemble_code(1, 7).unwrap(), assemble_code(0, 0).unwrap()];
        let mut buf = Vec::new();
        write_codes_csv(&codes, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "index,value,gray_bits\n0,15,1000\n1,7,0100\n");
    }

    #[test]
    fn word_parsing() {
        assert!("111".parse::<ThermometerWord>().is_err());
        assert!("11100x0".parse::<ThermometerWord>().is_err());
        assert_eq!(w("1100000").to_string(), "1100000");
        assert_eq!(ThermometerWord::from_mask(0b0000011), w("1100000"));
    }
}
