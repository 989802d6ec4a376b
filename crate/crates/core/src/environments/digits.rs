use num_bigint::{BigInt, Sign};

use crate::error::{Error, Result};

/// Largest digit position served in [`DigitMode::SpigotPi`] mode.
pub const SPIGOT_MAX_BITS: usize = 1 << 18;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DigitMode {
    /// Binary digits of the fractional part of π.
    SpigotPi,
    /// Keyed pseudorandom bit per position.
    SeededPrf,
}

impl DigitMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "SPIGOT_PI" => Ok(DigitMode::SpigotPi),
            "SEEDED_PRF" => Ok(DigitMode::SeededPrf),
            _ => Err(Error::Config(format!("unknown digit mode `{s}`"))),
        }
    }
}

/// Maps round `t` to the bit at position `t + offset` (positions start at 1).
#[derive(Clone, Debug)]
pub struct DigitSource {
    mode: DigitMode,
    key: u64,
    offset: usize,
    cache: Vec<u8>,
}

pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl DigitSource {
    pub fn new(mode: DigitMode, key: u64, offset: usize) -> Self {
        Self {
            mode,
            key,
            offset,
            cache: Vec::new(),
        }
    }

    pub fn spigot_pi() -> Self {
        Self::new(DigitMode::SpigotPi, 0, 0)
    }

    pub fn seeded(key: u64) -> Self {
        Self::new(DigitMode::SeededPrf, key, 0)
    }

    pub fn mode(&self) -> DigitMode {
        self.mode
    }

    pub fn for_round(&mut self, t: usize) -> Result<u8> {
        self.bit(t + self.offset)
    }

    pub fn bit(&mut self, position: usize) -> Result<u8> {
        if position == 0 {
            return Err(Error::Config("digit positions start at 1".into()));
        }
        match self.mode {
            DigitMode::SeededPrf => {
                Ok((splitmix64(self.key ^ splitmix64(position as u64)) >> 63) as u8)
            }
            DigitMode::SpigotPi => {
                if position > SPIGOT_MAX_BITS {
                    return Err(Error::Config(format!(
                        "digit position {position} exceeds the π spigot limit {SPIGOT_MAX_BITS}; use SEEDED_PRF"
                    )));
                }
                if position > self.cache.len() {
                    let n = position.next_power_of_two().clamp(4096, SPIGOT_MAX_BITS);
                    self.cache = pi_fraction_bits(n);
                }
                Ok(self.cache[position - 1])
            }
        }
    }
}

fn arctan_inverse(x: u32, one: &BigInt) -> BigInt {
    let x2 = BigInt::from(x) * x;
    let mut power = one / x;
    let mut sum = BigInt::from(0);
    let mut k: u64 = 0;
    loop {
        let term = &power / (2 * k + 1);
        if term.sign() == Sign::NoSign {
            return sum;
        }
        if k.is_multiple_of(2) {
            sum += term;
        } else {
            sum -= term;
        }
        power /= &x2;
        k += 1;
    }
}

/// Bits 1..=n of the binary expansion of π − 3, via Machin's formula.
pub(crate) fn pi_fraction_bits(n: usize) -> Vec<u8> {
    let prec = n + 64;
    let one = BigInt::from(1) << prec;
    let pi: BigInt = arctan_inverse(5, &one) * 16 - arctan_inverse(239, &one) * 4;
    let frac: BigInt = pi - (BigInt::from(3) << prec);
    let (_, mag) = frac.into_parts();
    (1..=n)
        .map(|k| u8::from(mag.bit((prec - k) as u64)))
        .collect()
}
