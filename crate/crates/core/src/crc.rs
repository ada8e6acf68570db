//! Bit-serial CRC over GF(2) with zero initial register and no final XOR.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polar::Bit;

/// CRC generator polynomial. `poly` holds the coefficients below the leading
/// term, so `0x03` with degree 6 is x^6 + x + 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct CrcPoly {
    degree: u32,
    poly: u64,
}

impl CrcPoly {
    /// CRC-6 0x03, x^6 + x + 1.
    pub const CRC6: CrcPoly = CrcPoly { degree: 6, poly: 0x03 };
    /// CRC-11 0x621, x^11 + x^10 + x^9 + x^5 + 1.
    pub const CRC11: CrcPoly = CrcPoly {
        degree: 11,
        poly: 0x621,
    };

    pub fn new(degree: u32, poly: u64) -> Result<Self> {
        if degree == 0 || degree > 32 {
            return Err(Error::invalid(format!("unsupported CRC degree {degree}")));
        }
        if poly >> degree != 0 {
            return Err(Error::invalid(format!(
                "polynomial 0x{poly:x} has terms at or above degree {degree}"
            )));
        }
        Ok(CrcPoly { degree, poly })
    }

    pub fn degree(&self) -> usize {
        self.degree as usize
    }

    pub fn poly(&self) -> u64 {
        self.poly
    }

    /// Remainder of m(x) x^r mod g(x), highest-degree coefficient first.
    /// The first message bit is the highest-degree message coefficient.
    pub fn remainder(&self, message: &[Bit]) -> Vec<Bit> {
        let r = self.degree;
        let mask = (1u64 << r) - 1;
        let mut reg = 0u64;
        for &b in message {
            let feedback = (b as u64 & 1) ^ (reg >> (r - 1));
            reg = (reg << 1) & mask;
            if feedback == 1 {
                reg ^= self.poly;
            }
        }
        (0..r).rev().map(|i| ((reg >> i) & 1) as Bit).collect()
    }

    /// True iff `word` (message followed by its remainder) has zero syndrome.
    pub fn check(&self, word: &[Bit]) -> bool {
        if word.len() < self.degree() {
            return false;
        }
        let (msg, rem) = word.split_at(word.len() - self.degree());
        self.remainder(msg) == rem
    }
}

impl fmt::Display for CrcPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:0x{:x}", self.degree, self.poly)
    }
}

impl FromStr for CrcPoly {
    type Err = Error;

    /// Accepts `crc6`, `crc11` or `<degree>:<hex>` such as `6:0x03`.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "crc6" | "crc-6" => Ok(CrcPoly::CRC6),
            "crc11" | "crc-11" => Ok(CrcPoly::CRC11),
            other => {
                let (deg, hex) = other
                    .split_once(':')
                    .ok_or_else(|| Error::invalid(format!("bad CRC descriptor '{s}'")))?;
                let degree = deg
                    .parse()
                    .map_err(|_| Error::invalid(format!("bad CRC degree '{deg}'")))?;
                let hex = hex.trim_start_matches("0x");
                let poly =
                    u64::from_str_radix(hex, 16).map_err(|_| Error::invalid(format!("bad CRC polynomial '{hex}'")))?;
                CrcPoly::new(degree, poly)
            }
        }
    }
}

impl TryFrom<String> for CrcPoly {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<CrcPoly> for String {
    fn from(p: CrcPoly) -> String {
        p.to_string()
    }
}
