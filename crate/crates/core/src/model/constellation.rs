use std::fmt;
use std::str::FromStr;

use crate::{Error, Result};

/// Square QAM orders supported by the detectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Modulation {
    Qpsk,
    Qam16,
    Qam64,
}

impl Modulation {
    pub fn order(self) -> usize {
        match self {
            Modulation::Qpsk => 4,
            Modulation::Qam16 => 16,
            Modulation::Qam64 => 64,
        }
    }

    pub fn from_order(order: usize) -> Result<Self> {
        match order {
            4 => Ok(Modulation::Qpsk),
            16 => Ok(Modulation::Qam16),
            64 => Ok(Modulation::Qam64),
            other => Err(Error::UnsupportedModulation(other)),
        }
    }
}

impl fmt::Display for Modulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Modulation::Qpsk => "qpsk",
            Modulation::Qam16 => "16qam",
            Modulation::Qam64 => "64qam",
        })
    }
}

impl FromStr for Modulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "qpsk" | "4qam" | "4" => Ok(Modulation::Qpsk),
            "16qam" | "16" => Ok(Modulation::Qam16),
            "64qam" | "64" => Ok(Modulation::Qam64),
            _ => Err(Error::InvalidParameter(format!("unknown modulation '{s}'"))),
        }
    }
}

/// Square M-QAM seen as two independent √M-PAM dimensions.
///
/// The PAM alphabet is the unnormalized odd-integer set
/// `{-√M+1, ..., -1, 1, ..., √M-1}`. Bits are Gray mapped per dimension:
/// alphabet index `i` carries the bits of `i ^ (i >> 1)`, most significant
/// bit first.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    modulation: Modulation,
    alphabet: Vec<f64>,
    bits_per_pam: usize,
}

impl Constellation {
    pub fn modulation(&self) -> Modulation {
        self.modulation
    }

    /// QAM order M.
    pub fn order(&self) -> usize {
        self.modulation.order()
    }

    /// PAM alphabet size m = √M.
    pub fn size(&self) -> usize {
        self.alphabet.len()
    }

    pub fn alphabet(&self) -> &[f64] {
        &self.alphabet
    }

    pub fn bits_per_pam(&self) -> usize {
        self.bits_per_pam
    }

    pub fn max_symbol(&self) -> f64 {
        self.alphabet[self.alphabet.len() - 1]
    }

    /// Average complex-symbol energy Es = 2·mean(χ²).
    pub fn symbol_energy(&self) -> f64 {
        2.0 * self.alphabet.iter().map(|s| s * s).sum::<f64>() / self.alphabet.len() as f64
    }

    /// Index of `value` in the alphabet, if it is a symbol.
    pub fn index_of(&self, value: f64) -> Option<usize> {
        // symbols are odd integers: (v + m - 1) / 2 is the index
        let m = self.alphabet.len() as f64;
        let idx = (value + m - 1.0) / 2.0;
        if idx.fract() == 0.0 && idx >= 0.0 && idx < m {
            Some(idx as usize)
        } else {
            None
        }
    }

    pub fn contains(&self, value: f64) -> bool {
        self.index_of(value).is_some()
    }
}

pub fn make_constellation(order: usize) -> Result<Constellation> {
    let modulation = Modulation::from_order(order)?;
    let m: usize = match modulation {
        Modulation::Qpsk => 2,
        Modulation::Qam16 => 4,
        Modulation::Qam64 => 8,
    };
    let alphabet = (0..m).map(|i| (2 * i) as f64 - (m - 1) as f64).collect();
    Ok(Constellation {
        modulation,
        alphabet,
        bits_per_pam: m.trailing_zeros() as usize,
    })
}

impl From<Modulation> for Constellation {
    fn from(modulation: Modulation) -> Self {
        make_constellation(modulation.order()).expect("supported order")
    }
}

/// Maps groups of `bits_per_pam` bits onto PAM symbols.
pub fn map_bits(bits: &[u8], c: &Constellation) -> Result<Vec<f64>> {
    let k = c.bits_per_pam;
    if !bits.len().is_multiple_of(k) {
        return Err(Error::BitLength { len: bits.len(), group: k });
    }
    Ok(bits
        .chunks(k)
        .map(|group| {
            let gray = group.iter().fold(0usize, |acc, &b| (acc << 1) | (b & 1) as usize);
            c.alphabet[gray_to_binary(gray)]
        })
        .collect())
}

/// Inverse of [`map_bits`].
pub fn demap_symbols(symbols: &[f64], c: &Constellation) -> Result<Vec<u8>> {
    let k = c.bits_per_pam;
    let mut bits = Vec::with_capacity(symbols.len() * k);
    for &s in symbols {
        let idx = c.index_of(s).ok_or(Error::NotInAlphabet(s))?;
        let gray = idx ^ (idx >> 1);
        bits.extend((0..k).rev().map(|j| ((gray >> j) & 1) as u8));
    }
    Ok(bits)
}

fn gray_to_binary(mut g: usize) -> usize {
    let mut b = g;
    while g > 0 {
        g >>= 1;
        b ^= g;
    }
    b
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn alphabets() {
        let qpsk = make_constellation(4).unwrap();
        assert_eq!(qpsk.alphabet(), &[-1.0, 1.0]);
        assert_eq!(qpsk.size(), 2);
        assert_eq!(qpsk.symbol_energy(), 2.0);

        let qam16 = make_constellation(16).unwrap();
        assert_eq!(qam16.alphabet(), &[-3.0, -1.0, 1.0, 3.0]);
        assert_eq!(qam16.size(), 4);
        assert_eq!(qam16.symbol_energy(), 10.0);

        let qam64 = make_constellation(64).unwrap();
        assert_eq!(qam64.size(), 8);
        assert_eq!(qam64.bits_per_pam(), 3);
        assert_eq!(qam64.symbol_energy(), 42.0);
        for c in [qpsk, qam16, qam64] {
            let a = c.alphabet();
            assert!(a.windows(2).all(|w| w[0] < w[1]));
            assert!(a.iter().all(|s| s.rem_euclid(2.0) == 1.0));
            assert!(a.iter().zip(a.iter().rev()).all(|(l, r)| l == &-r));
        }
    }

    #[test]
    fn rejects_unsupported_order() {
        assert_eq!(make_constellation(5), Err(Error::UnsupportedModulation(5)));
        assert!(make_constellation(8).is_err());
        assert!(make_constellation(256).is_err());
    }

    #[test]
    fn binary_mapping() {
        let c = make_constellation(4).unwrap();
        assert_eq!(map_bits(&[0, 1], &c).unwrap(), vec![-1.0, 1.0]);
        assert_eq!(map_bits(&[0; 4], &c).unwrap(), vec![-1.0; 4]);
        assert_eq!(demap_symbols(&[1.0, -1.0], &c).unwrap(), vec![1, 0]);
    }

    #[test]
    fn gray_mapping_4pam() {
        let c = make_constellation(16).unwrap();
        // enumerate the 2-bit Gray sequence 00, 01, 11, 10 in alphabet order
        let table = [([0, 0], -3.0), ([0, 1], -1.0), ([1, 1], 1.0), ([1, 0], 3.0)];
        for (bits, sym) in table {
            assert_eq!(map_bits(&bits, &c).unwrap(), vec![sym]);
            assert_eq!(demap_symbols(&[sym], &c).unwrap(), bits.to_vec());
        }
        // neighbours differ in exactly one bit
        for w in c.alphabet().windows(2) {
            let a = demap_symbols(&[w[0]], &c).unwrap();
            let b = demap_symbols(&[w[1]], &c).unwrap();
            assert_eq!(a.iter().zip(&b).filter(|(x, y)| x != y).count(), 1);
        }
    }

    #[test]
    fn mapping_errors() {
        let c = make_constellation(16).unwrap();
        assert_eq!(map_bits(&[0, 1, 1], &c), Err(Error::BitLength { len: 3, group: 2 }));
        assert_eq!(demap_symbols(&[2.0], &c), Err(Error::NotInAlphabet(2.0)));
        assert_eq!(demap_symbols(&[5.0], &c), Err(Error::NotInAlphabet(5.0)));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn map_demap_roundtrip(order in prop::sample::select(vec![4usize, 16, 64]),
                               seed_bits in prop::collection::vec(0u8..2, 0..96)) {
            let c = make_constellation(order).unwrap();
            let k = c.bits_per_pam();
            let bits = &seed_bits[..seed_bits.len() / k * k];
            let x = map_bits(bits, &c).unwrap();
            prop_assert!(x.iter().all(|&s| c.contains(s)));
            prop_assert_eq!(demap_symbols(&x, &c).unwrap(), bits.to_vec());
        }
    }
}
