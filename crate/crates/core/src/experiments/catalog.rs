//! Built-in formula table: every function a scenario file can name.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::C64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Formula {
    Zero,
    One,
    /// `x`
    Lambda,
    /// `x²`
    Lambda2,
    /// `2x`
    Linear2,
    /// `exp(-(x - c)² / 2s²)`
    Gauss { s: f64, c: f64 },
    /// Gaussian times `exp(i w x)`.
    Chirp { s: f64, c: f64, w: f64 },
    /// `cos(w x)`
    Cos { w: f64 },
}

pub const FORMULA_IDS: [&str; 8] = ["zero", "one", "lambda", "lambda2", "linear2", "gauss:s[:c]", "chirp:s:c:w", "cos:w"];

fn num(key: &str, s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::InvalidArgument(format!("`{s}` is not a number in formula `{key}`")))
}

impl Formula {
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let mut parts = s.split(':');
        let id = parts.next().unwrap_or_default();
        let args: Vec<f64> = parts.map(|a| num(s, a)).collect::<Result<_>>()?;
        let arity = |lo: usize, hi: usize| {
            if args.len() < lo || args.len() > hi {
                Err(Error::InvalidArgument(format!("formula `{id}` takes {lo}..={hi} parameters")))
            } else {
                Ok(())
            }
        };
        let f = match id {
            "zero" => Formula::Zero,
            "one" => Formula::One,
            "lambda" => Formula::Lambda,
            "lambda2" => Formula::Lambda2,
            "linear2" => Formula::Linear2,
            "gauss" => {
                arity(1, 2)?;
                Formula::Gauss { s: args[0], c: args.get(1).copied().unwrap_or(0.0) }
            }
            "chirp" => {
                arity(3, 3)?;
                Formula::Chirp { s: args[0], c: args[1], w: args[2] }
            }
            "cos" => {
                arity(1, 1)?;
                Formula::Cos { w: args[0] }
            }
            _ => return Err(Error::InvalidArgument(format!("unknown formula id `{id}`"))),
        };
        if !matches!(f, Formula::Gauss { .. } | Formula::Chirp { .. } | Formula::Cos { .. }) {
            arity(0, 0)?;
        }
        if let Formula::Gauss { s, .. } | Formula::Chirp { s, .. } = f {
            if s <= 0.0 {
                return Err(Error::InvalidArgument(format!("width in `{s}` must be positive")));
            }
        }
        Ok(f)
    }

    pub fn eval(&self, x: f64) -> C64 {
        let r = |v: f64| C64::new(v, 0.0);
        match *self {
            Formula::Zero => r(0.0),
            Formula::One => r(1.0),
            Formula::Lambda => r(x),
            Formula::Lambda2 => r(x * x),
            Formula::Linear2 => r(2.0 * x),
            Formula::Gauss { s, c } => r((-(x - c).powi(2) / (2.0 * s * s)).exp()),
            Formula::Chirp { s, c, w } => C64::from_polar((-(x - c).powi(2) / (2.0 * s * s)).exp(), w * x),
            Formula::Cos { w } => r((w * x).cos()),
        }
    }

    /// Closed-form transform `∫ f(x) e^{-ixξ} dx / √(2π)` where one exists.
    pub fn fourier(&self, xi: f64) -> Option<C64> {
        match *self {
            Formula::Gauss { s, c } => Some(C64::from_polar(s * (-s * s * xi * xi / 2.0).exp(), -c * xi)),
            Formula::Chirp { s, c, w } => {
                let d = xi - w;
                Some(C64::from_polar(s * (-s * s * d * d / 2.0).exp(), -c * d))
            }
            Formula::Zero => Some(C64::new(0.0, 0.0)),
            _ => None,
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Zero => write!(f, "zero"),
            Formula::One => write!(f, "one"),
            Formula::Lambda => write!(f, "lambda"),
            Formula::Lambda2 => write!(f, "lambda2"),
            Formula::Linear2 => write!(f, "linear2"),
            Formula::Gauss { s, c } => write!(f, "gauss:{s}:{c}"),
            Formula::Chirp { s, c, w } => write!(f, "chirp:{s}:{c}:{w}"),
            Formula::Cos { w } => write!(f, "cos:{w}"),
        }
    }
}

/// `[coef*]id[@a:b]`: a scaled formula, optionally cut to a closed window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub coef: f64,
    pub formula: Formula,
    pub window: Option<(f64, f64)>,
}

impl Term {
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let (body, window) = match s.split_once('@') {
            Some((b, w)) => {
                let (a, c) = w
                    .split_once(':')
                    .ok_or_else(|| Error::InvalidArgument(format!("window in `{s}` must be a:b")))?;
                (b, Some((num(s, a)?, num(s, c)?)))
            }
            None => (s, None),
        };
        let (coef, id) = match body.split_once('*') {
            Some((c, id)) => (num(s, c)?, id),
            None => (1.0, body),
        };
        Ok(Term { coef, formula: Formula::parse(id)?, window })
    }

    pub fn eval(&self, x: f64) -> C64 {
        if let Some((a, b)) = self.window {
            let slack = 1e-12 * (1.0 + a.abs().max(b.abs()));
            if x < a - slack || x > b + slack {
                return C64::new(0.0, 0.0);
            }
        }
        self.formula.eval(x) * self.coef
    }
}

/// One term per channel, comma separated.
pub fn parse_channels(s: &str) -> Result<Vec<Term>> {
    s.split(',').map(Term::parse).collect()
}

pub fn inv_sqrt_2pi() -> f64 {
    1.0 / (2.0 * PI).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn terms_parse() {
        let t = Term::parse("-0.5*gauss:0.2:0.4@0:0.5").unwrap();
        assert_eq!(t.coef, -0.5);
        assert_eq!(t.formula, Formula::Gauss { s: 0.2, c: 0.4 });
        assert_eq!(t.eval(0.7), C64::new(0.0, 0.0));
        assert!((t.eval(0.4) - C64::new(-0.5, 0.0)).norm() < 1e-15);
        assert_eq!(parse_channels("one, zero").unwrap().len(), 2);
        assert!(Term::parse("wobble").is_err());
        assert!(Term::parse("gauss").is_err());
        assert!(Term::parse("one:3").is_err());
    }
}
