use num_rational::Ratio;

use crate::NetError;

/// Exact nonnegative fraction used for rates and adversary power, so that a
/// configured `alpha = 1/5` is honored without float drift.
pub type Frac = Ratio<u64>;

/// Shorthand constructor (reduces automatically).
pub fn frac(num: u64, denom: u64) -> Frac {
    Ratio::new(num, denom)
}

pub fn frac_to_f64(f: Frac) -> f64 {
    *f.numer() as f64 / *f.denom() as f64
}

/// Parse `"a/b"`, a decimal like `"0.25"`, or a plain integer.
pub fn parse_frac(text: &str) -> Result<Frac, NetError> {
    let bad = || NetError::BadFrac(text.to_string());
    let t = text.trim();
    if let Some((a, b)) = t.split_once('/') {
        let num: u64 = a.trim().parse().map_err(|_| bad())?;
        let denom: u64 = b.trim().parse().map_err(|_| bad())?;
        if denom == 0 {
            return Err(bad());
        }
        return Ok(Ratio::new(num, denom));
    }
    if let Some((int_part, frac_part)) = t.split_once('.') {
        if frac_part.is_empty() || frac_part.len() > 12 || frac_part.bytes().any(|c| !c.is_ascii_digit()) {
            return Err(bad());
        }
        let whole: u64 = if int_part.is_empty() {
            0
        } else {
            int_part.parse().map_err(|_| bad())?
        };
        let scale = 10u64.pow(frac_part.len() as u32);
        let frac_digits: u64 = frac_part.parse().map_err(|_| bad())?;
        return Ok(Ratio::new(whole * scale + frac_digits, scale));
    }
    let whole: u64 = t.parse().map_err(|_| bad())?;
    Ok(Ratio::from_integer(whole))
}

/// Round a float to the nearest fraction with denominator 10^9 (used when a
/// config file supplies a bare float, which TOML parses before we can see
/// the exact digits).
pub fn frac_from_f64(x: f64) -> Result<Frac, NetError> {
    if !(x.is_finite() && x >= 0.0 && x < 1.8e10) {
        return Err(NetError::BadFrac(format!("{x}")));
    }
    let scale = 1_000_000_000u64;
    Ok(Ratio::new((x * scale as f64).round() as u64, scale))
}

/// Global parameters every protocol run shares.
///
/// `n` nodes exchange messages subject to the delay bound `delta` (in clock
/// steps); an adversary controls an `alpha` fraction of them; `kappa` is
/// the security parameter that sizes cryptographic stubs and failure
/// probabilities (`2^-kappa`); `p` is the protocol-specific rate or
/// hardness knob; `b` the payload size in bits of one broadcast batch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelParams {
    pub n: u32,
    pub delta: u64,
    pub alpha: Frac,
    pub kappa: u32,
    pub p: Frac,
    pub b: u64,
}

impl ModelParams {
    /// Range-check every field.
    pub fn validate(&self) -> Result<(), NetError> {
        if self.n == 0 {
            return Err(NetError::BadParam("n must be at least 1".into()));
        }
        if self.delta == 0 {
            return Err(NetError::BadParam("delta must be at least 1 step".into()));
        }
        if self.alpha >= Ratio::from_integer(1) {
            return Err(NetError::BadParam(format!(
                "alpha {} must be below 1",
                self.alpha
            )));
        }
        if self.kappa == 0 {
            return Err(NetError::BadParam("kappa must be at least 1".into()));
        }
        if self.p == Ratio::from_integer(0) {
            return Err(NetError::BadParam("p must be positive".into()));
        }
        if self.b == 0 {
            return Err(NetError::BadParam("payload b must be at least 1 bit".into()));
        }
        Ok(())
    }

    /// Reject runs whose adversary is not strictly below `threshold`.
    /// Equality fails: a protocol's guarantees are proven for strictly
    /// smaller adversaries only.
    pub fn check_admissible(&self, threshold: Frac) -> Result<(), NetError> {
        if self.alpha >= threshold {
            return Err(NetError::Inadmissible {
                alpha: self.alpha,
                threshold,
            });
        }
        Ok(())
    }

    /// Number of nodes the adversary takes: `floor(alpha * n)`.
    pub fn byz_count(&self) -> u32 {
        (self.alpha * Ratio::from_integer(self.n as u64))
            .floor()
            .to_integer() as u32
    }

    pub fn honest_count(&self) -> u32 {
        self.n - self.byz_count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fraction_decimal_and_integer_forms() {
        assert_eq!(parse_frac("1/5").unwrap(), frac(1, 5));
        assert_eq!(parse_frac("0.2").unwrap(), frac(1, 5));
        assert_eq!(parse_frac("0.25").unwrap(), frac(1, 4));
        assert_eq!(parse_frac("3").unwrap(), Ratio::from_integer(3));
        assert_eq!(parse_frac(" 2 / 8 ").unwrap(), frac(1, 4));
        assert_eq!(parse_frac(".5").unwrap(), frac(1, 2));
    }

    #[test]
    fn rejects_malformed_fractions() {
        for bad in ["", "x", "1/0", "1/", "/3", "0.2.3", "1.x", "-1/2"] {
            assert!(parse_frac(bad).is_err(), "{bad:?} should not parse");
        }
    }

    #[test]
    fn float_fractions_recover_simple_ratios() {
        assert_eq!(frac_from_f64(0.2).unwrap(), frac(1, 5));
        assert_eq!(frac_from_f64(0.25).unwrap(), frac(1, 4));
        assert_eq!(frac_from_f64(1.0 / 3.0).unwrap(), frac(333333333, 1000000000));
    }

    fn base() -> ModelParams {
        ModelParams {
            n: 10,
            delta: 4,
            alpha: frac(1, 5),
            kappa: 16,
            p: frac(1, 10),
            b: 1024,
        }
    }

    #[test]
    fn validation_catches_degenerate_fields() {
        assert!(base().validate().is_ok());
        for break_it in [
            &mut |p: &mut ModelParams| p.n = 0 as _,
            &mut |p: &mut ModelParams| p.delta = 0,
            &mut |p: &mut ModelParams| p.alpha = Ratio::from_integer(1),
            &mut |p: &mut ModelParams| p.kappa = 0,
            &mut |p: &mut ModelParams| p.p = Ratio::from_integer(0),
            &mut |p: &mut ModelParams| p.b = 0,
        ] as [&mut dyn FnMut(&mut ModelParams); 6]
        {
            let mut params = base();
            break_it(&mut params);
            assert!(params.validate().is_err());
        }
    }

    #[test]
    fn admissibility_is_strict() {
        let mut params = base();
        params.alpha = frac(1, 3);
        // Equal to the threshold: rejected, the guarantee needs strictly less.
        assert!(matches!(
            params.check_admissible(frac(1, 3)),
            Err(NetError::Inadmissible { .. })
        ));
        params.alpha = frac(33, 100);
        assert!(params.check_admissible(frac(1, 3)).is_ok());
    }

    #[test]
    fn byz_count_floors() {
        let mut params = base();
        params.n = 10;
        params.alpha = frac(1, 3);
        assert_eq!(params.byz_count(), 3);
        assert_eq!(params.honest_count(), 7);
        params.n = 4;
        params.alpha = frac(1, 4);
        assert_eq!(params.byz_count(), 1);
        params.alpha = frac(0, 1);
        assert_eq!(params.byz_count(), 0);
    }
}
