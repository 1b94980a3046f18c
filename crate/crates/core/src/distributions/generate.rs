use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{JointDistribution, Variable, ORACLE_MAX_INPUTS};
use crate::error::{Error, Result};

/// Seven-segment encoding of the digits 0..9, segments X1..X7.
pub const DIGIT_SEGMENTS: [[u32; 7]; 10] = [
    [1, 1, 1, 0, 1, 1, 1],
    [0, 0, 1, 0, 0, 1, 0],
    [1, 0, 1, 1, 1, 0, 1],
    [1, 0, 1, 1, 0, 1, 1],
    [0, 1, 1, 1, 0, 1, 0],
    [1, 1, 0, 1, 0, 1, 1],
    [1, 1, 0, 1, 1, 1, 1],
    [1, 0, 1, 0, 0, 1, 0],
    [1, 1, 1, 1, 1, 1, 1],
    [1, 1, 1, 1, 0, 1, 1],
];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "problem", rename_all = "snake_case")]
pub enum Problem {
    /// Ten equiprobable digits, seven deterministic segment indicators.
    Digit,
    /// `Digit` with X1 refined into four equiprobable ordered values.
    DigitCard4,
    /// `Y = X1 xor X2`; `X3 = Y` with probability `alpha`, uniform otherwise.
    XorStrongWeak { alpha: f64 },
    /// Three binary inputs and a binary context; `Y = 2` if `X1 = 0`, else
    /// `X2` in context 0 and `X3` in context 1.
    Problem1Context,
    /// Two copies of `Digit` plus an irrelevant `X8`; in context 1 the
    /// segments X5..X7 are replaced by independent noise.
    Problem2Context,
    /// Binary X1, X2, context; `Y = X1` when `X2 = Xc`, else uniform on {2,3}.
    Example1Context,
    /// `deg(X_i) = i - 1` for the `r` relevant inputs; `p - r` noise inputs.
    Chain { p: usize, r: usize },
    /// `Y = X1 xor ... xor Xr`; `p - r` noise inputs.
    Clique { p: usize, r: usize },
    /// Each of `r` inputs is an independent 0.75-accurate copy of `Y`.
    MarginalOnly { p: usize, r: usize },
    /// Ordered ternary X1 and binary X2 with `Y = [X1 >= 1] = X2`, three
    /// equiprobable rows.
    BinarySplit,
    /// `X1 = Y` and `X2 = Y` flipped with probability `flip`.
    NoisyCopy { flip: f64 },
}

impl Problem {
    pub fn name(&self) -> &'static str {
        match self {
            Problem::Digit => "digit",
            Problem::DigitCard4 => "digit_card4",
            Problem::XorStrongWeak { .. } => "xor_strongweak",
            Problem::Problem1Context => "problem1_context",
            Problem::Problem2Context => "problem2_context",
            Problem::Example1Context => "example1_context",
            Problem::Chain { .. } => "chain",
            Problem::Clique { .. } => "clique",
            Problem::MarginalOnly { .. } => "marginal_only",
            Problem::BinarySplit => "binary_split",
            Problem::NoisyCopy { .. } => "noisy_copy",
        }
    }
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Problem::XorStrongWeak { alpha } => write!(f, "xor_strongweak:{alpha}"),
            Problem::Chain { p, r } => write!(f, "chain:{p},{r}"),
            Problem::Clique { p, r } => write!(f, "clique:{p},{r}"),
            Problem::MarginalOnly { p, r } => write!(f, "marginal_only:{p},{r}"),
            Problem::NoisyCopy { flip } => write!(f, "noisy_copy:{flip}"),
            other => f.write_str(other.name()),
        }
    }
}

/// Parses `name` or `name:arg[,arg]`, e.g. `xor_strongweak:0.8`, `chain:5,2`.
impl FromStr for Problem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = match s.split_once(':') {
            Some((n, a)) => (n.trim(), a.split(',').map(str::trim).collect::<Vec<_>>()),
            None => (s.trim(), Vec::new()),
        };
        let float = |i: usize| -> Result<f64> {
            args.get(i)
                .ok_or_else(|| Error::param(format!("{name} needs argument #{}", i + 1)))?
                .parse::<f64>()
                .map_err(|e| Error::param(format!("{name}: {e}")))
        };
        let int = |i: usize| -> Result<usize> {
            args.get(i)
                .ok_or_else(|| Error::param(format!("{name} needs argument #{}", i + 1)))?
                .parse::<usize>()
                .map_err(|e| Error::param(format!("{name}: {e}")))
        };
        Ok(match name {
            "digit" => Problem::Digit,
            "digit_card4" => Problem::DigitCard4,
            "xor_strongweak" => Problem::XorStrongWeak { alpha: float(0)? },
            "problem1_context" => Problem::Problem1Context,
            "problem2_context" => Problem::Problem2Context,
            "example1_context" => Problem::Example1Context,
            "chain" => Problem::Chain { p: int(0)?, r: int(1)? },
            "clique" => Problem::Clique { p: int(0)?, r: int(1)? },
            "marginal_only" => Problem::MarginalOnly { p: int(0)?, r: int(1)? },
            "binary_split" => Problem::BinarySplit,
            "noisy_copy" => Problem::NoisyCopy { flip: float(0)? },
            other => return Err(Error::param(format!("unknown problem {other:?}"))),
        })
    }
}

fn inputs(n: usize, card: u32) -> Vec<Variable> {
    (1..=n).map(|i| Variable::new(format!("X{i}"), card)).collect()
}

fn check_pr(p: usize, r: usize) -> Result<()> {
    if r == 0 || r > p {
        return Err(Error::param(format!("need 1 <= r <= p, got p={p}, r={r}")));
    }
    if p > ORACLE_MAX_INPUTS {
        return Err(Error::TooLarge {
            size: p,
            limit: ORACLE_MAX_INPUTS,
        });
    }
    Ok(())
}

fn bits(value: usize, n: usize) -> impl Iterator<Item = u32> {
    (0..n).map(move |i| ((value >> i) & 1) as u32)
}

pub fn generate(problem: Problem) -> Result<JointDistribution> {
    match problem {
        Problem::Digit => {
            let entries = (0..10u32).map(|y| {
                let mut c = DIGIT_SEGMENTS[y as usize].to_vec();
                c.push(y);
                (c, 0.1)
            });
            JointDistribution::normalized(inputs(7, 2), Variable::new("Y", 10), None, entries)
        }
        Problem::DigitCard4 => {
            let mut vars = inputs(7, 2);
            vars[0] = Variable::ordered("X1", 4);
            let mut entries = Vec::new();
            for y in 0..10u32 {
                let seg = DIGIT_SEGMENTS[y as usize];
                for half in 0..2 {
                    let mut c = seg.to_vec();
                    c[0] = 2 * seg[0] + half;
                    c.push(y);
                    entries.push((c, 0.05));
                }
            }
            JointDistribution::normalized(vars, Variable::new("Y", 10), None, entries)
        }
        Problem::XorStrongWeak { alpha } => {
            if !(0.0..=1.0).contains(&alpha) {
                return Err(Error::param(format!("alpha must lie in [0,1], got {alpha}")));
            }
            let mut entries = Vec::new();
            for x1 in 0..2u32 {
                for x2 in 0..2u32 {
                    let y = x1 ^ x2;
                    for x3 in 0..2u32 {
                        let p3 = if x3 == y { alpha } else { 0.0 } + (1.0 - alpha) / 2.0;
                        entries.push((vec![x1, x2, x3, y], 0.25 * p3));
                    }
                }
            }
            JointDistribution::normalized(inputs(3, 2), Variable::new("Y", 2), None, entries)
        }
        Problem::Problem1Context => {
            let mut entries = Vec::new();
            for c in 0..2u32 {
                for x in 0..8usize {
                    let v: Vec<u32> = bits(x, 3).collect();
                    let y = match (v[0], c) {
                        (0, _) => 2,
                        (_, 0) => v[1],
                        _ => v[2],
                    };
                    entries.push((vec![v[0], v[1], v[2], y, c], 1.0 / 16.0));
                }
            }
            JointDistribution::normalized(
                inputs(3, 2),
                Variable::new("Y", 3),
                Some(Variable::new("Xc", 2)),
                entries,
            )
        }
        Problem::Problem2Context => {
            let mut entries = Vec::new();
            for y in 0..10u32 {
                let seg = DIGIT_SEGMENTS[y as usize];
                for x8 in 0..2u32 {
                    let mut c = seg.to_vec();
                    c.extend([x8, y, 0]);
                    entries.push((c, 0.5 * 0.1 * 0.5));
                }
                for noise in 0..16usize {
                    let mut c = seg[..4].to_vec();
                    c.extend(bits(noise, 4));
                    c.extend([y, 1]);
                    entries.push((c, 0.5 * 0.1 / 16.0));
                }
            }
            JointDistribution::normalized(
                inputs(8, 2),
                Variable::new("Y", 10),
                Some(Variable::new("Xc", 2)),
                entries,
            )
        }
        Problem::Example1Context => {
            let mut entries = Vec::new();
            for x1 in 0..2u32 {
                for x2 in 0..2u32 {
                    for c in 0..2u32 {
                        if x2 == c {
                            entries.push((vec![x1, x2, x1, c], 0.125));
                        } else {
                            entries.push((vec![x1, x2, 2, c], 0.0625));
                            entries.push((vec![x1, x2, 3, c], 0.0625));
                        }
                    }
                }
            }
            JointDistribution::normalized(
                inputs(2, 2),
                Variable::new("Y", 4),
                Some(Variable::new("Xc", 2)),
                entries,
            )
        }
        Problem::Chain { p, r } => {
            check_pr(p, r)?;
            // A latent level L, uniform on 0..r, picks which prefix parity
            // X1 ^ ... ^ X_{L+1} is revealed; Y = 2L + parity. X_i is then
            // independent of Y unless X1..X_{i-1} are all conditioned on.
            let mut entries = Vec::with_capacity(r << p);
            let w = 1.0 / ((1usize << p) as f64 * r as f64);
            for x in 0..(1usize << p) {
                let v: Vec<u32> = bits(x, p).collect();
                for level in 0..r {
                    let parity = v[..=level].iter().fold(0, |a, b| a ^ b);
                    let mut c = v.clone();
                    c.push(2 * level as u32 + parity);
                    entries.push((c, w));
                }
            }
            JointDistribution::normalized(
                inputs(p, 2),
                Variable::new("Y", 2 * r.max(1) as u32),
                None,
                entries,
            )
        }
        Problem::Clique { p, r } => {
            check_pr(p, r)?;
            let w = 1.0 / (1usize << p) as f64;
            let entries = (0..(1usize << p)).map(|x| {
                let mut c: Vec<u32> = bits(x, p).collect();
                let y = c[..r].iter().fold(0, |a, b| a ^ b);
                c.push(y);
                (c, w)
            });
            JointDistribution::normalized(inputs(p, 2), Variable::new("Y", 2), None, entries)
        }
        Problem::MarginalOnly { p, r } => {
            check_pr(p, r)?;
            let noise = 1.0 / (1usize << (p - r)) as f64;
            let mut entries = Vec::with_capacity(2 << p);
            for y in 0..2u32 {
                for x in 0..(1usize << p) {
                    let c: Vec<u32> = bits(x, p).collect();
                    let agree = c[..r].iter().filter(|&&v| v == y).count() as i32;
                    let prob = 0.5
                        * 0.75f64.powi(agree)
                        * 0.25f64.powi(r as i32 - agree)
                        * noise;
                    let mut c = c;
                    c.push(y);
                    entries.push((c, prob));
                }
            }
            JointDistribution::normalized(inputs(p, 2), Variable::new("Y", 2), None, entries)
        }
        Problem::BinarySplit => {
            let vars = vec![Variable::ordered("X1", 3), Variable::ordered("X2", 2)];
            let third = 1.0 / 3.0;
            JointDistribution::normalized(
                vars,
                Variable::new("Y", 2),
                None,
                vec![(vec![0, 0, 0], third), (vec![1, 1, 1], third), (vec![2, 1, 1], third)],
            )
        }
        Problem::NoisyCopy { flip } => {
            if !(0.0..=0.5).contains(&flip) {
                return Err(Error::param(format!("flip must lie in [0,0.5], got {flip}")));
            }
            let mut entries = Vec::new();
            for y in 0..2u32 {
                entries.push((vec![y, y, y], 0.5 * (1.0 - flip)));
                entries.push((vec![y, 1 - y, y], 0.5 * flip));
            }
            JointDistribution::normalized(inputs(2, 2), Variable::new("Y", 2), None, entries)
        }
    }
}
