//! Line-oriented scenario files: `section.key = value`, `#` comments.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::spectral::MultiplicityProfile;
use crate::transform::Flavor;

use super::catalog::{parse_channels, Formula, Term};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub lower: f64,
    pub upper: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceId {
    Generator,
    Lebesgue,
}

#[derive(Debug, Clone, PartialEq)]
pub enum UnitaryId {
    Identity,
    Dft,
    DiffeoExp,
    RotReflect(f64),
    Atomic(Vec<f64>),
}

impl UnitaryId {
    fn parse(s: &str) -> Option<Self> {
        let s = s.trim();
        Some(match s {
            "identity" => UnitaryId::Identity,
            "dft" => UnitaryId::Dft,
            "diffeo:exp" => UnitaryId::DiffeoExp,
            _ => {
                if let Some(t) = s.strip_prefix("rotreflect:") {
                    UnitaryId::RotReflect(t.trim().parse().ok()?)
                } else if let Some(l) = s.strip_prefix("atomic:") {
                    UnitaryId::Atomic(l.split(',').map(|v| v.trim().parse().ok()).collect::<Option<_>>()?)
                } else {
                    return None;
                }
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SideSpec {
    pub weight: Formula,
    pub profile: MultiplicityProfile,
    pub profile_src: String,
    /// Per generator, one term per channel. P-side terms are functions of
    /// `λ`; Q-side terms give spectral coefficients as functions of `ξ`.
    pub gens: Vec<Vec<Term>>,
    pub reference: ReferenceId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expect {
    /// Q-side forward or ket, computed from the Q model itself.
    QSide,
    /// Direct quadrature of the Fourier integral.
    Fourier,
    /// Closed-form change of variables through the Q relabelling.
    ChangeOfVariables,
    /// The sweep must be refused with this error kind.
    Rejection(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Absolute,
    Relative,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub name: String,
    pub flavor: Flavor,
    pub xi: Vec<f64>,
    /// Channels, counted from 0.
    pub k: Vec<usize>,
    pub probe: Vec<Term>,
    pub contraction: Option<(f64, f64, usize)>,
    pub depth: Option<usize>,
    pub l: Vec<usize>,
    pub expect: Expect,
    pub tol: f64,
    pub metric: Metric,
}

impl SweepSpec {
    /// Number of `n` levels the sweep visits.
    pub fn levels(&self) -> usize {
        match self.flavor {
            Flavor::MartingaleHilbert | Flavor::MartingaleKet => self.depth.unwrap_or(0),
            _ => self.contraction.map(|c| c.2).unwrap_or(0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub forms: f64,
    pub lemma: f64,
    pub parseval: f64,
    pub recon: f64,
    pub iso: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { forms: 1e-8, lemma: 1e-6, parseval: 1e-6, recon: 1e-6, iso: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub grid: GridSpec,
    pub p: SideSpec,
    pub q: SideSpec,
    pub unitary: UnitaryId,
    pub sweeps: Vec<SweepSpec>,
    pub tol: Tolerances,
    pub out_dir: Option<PathBuf>,
    pub seed: u64,
    /// The file as loaded, for the report.
    pub source: String,
}

const SWEEP_KEYS: [&str; 10] = ["flavor", "xi", "k", "probe", "contraction", "depth", "l", "expect", "tol", "metric"];

const KEYS: [&str; 18] = [
    "seed",
    "grid.lower",
    "grid.upper",
    "grid.period",
    "grid.n",
    "p.variant",
    "p.weight",
    "p.profile",
    "p.reference",
    "q.unitary",
    "q.reference",
    "tol.forms",
    "tol.lemma",
    "tol.parseval",
    "tol.recon",
    "tol.iso",
    "out.name",
    "out.dir",
];

fn cfg_err(key: &str, msg: impl Into<String>) -> Error {
    Error::Config { key: key.to_string(), msg: msg.into() }
}

fn known(key: &str) -> bool {
    if KEYS.contains(&key) {
        return true;
    }
    if let Some(rest) = key.strip_prefix("p.gen.").or_else(|| key.strip_prefix("q.gen.")) {
        return rest.parse::<usize>().map(|j| j >= 1).unwrap_or(false);
    }
    if let Some(rest) = key.strip_prefix("sweep.") {
        if let Some((name, field)) = rest.rsplit_once('.') {
            return !name.is_empty()
                && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
                && SWEEP_KEYS.contains(&field);
        }
    }
    false
}

/// Raw `key → (line, value)` map with the key order of first appearance.
fn parse_lines(text: &str) -> Result<(BTreeMap<String, (usize, String)>, Vec<String>)> {
    let mut map = BTreeMap::new();
    let mut order = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (k, v) = content
            .split_once('=')
            .ok_or_else(|| Error::Parse { line, msg: format!("expected `key = value`, got `{content}`") })?;
        let (k, v) = (k.trim().to_string(), v.trim().to_string());
        if k.is_empty() || v.is_empty() {
            return Err(Error::Parse { line, msg: "empty key or value".into() });
        }
        if !known(&k) {
            return Err(Error::Parse { line, msg: format!("unknown key `{k}`") });
        }
        if map.insert(k.clone(), (line, v)).is_some() {
            return Err(Error::Parse { line, msg: format!("duplicate key `{k}`") });
        }
        order.push(k);
    }
    Ok((map, order))
}

struct Fields {
    map: BTreeMap<String, (usize, String)>,
}

impl Fields {
    fn get(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(|(_, v)| v.as_str())
    }

    fn req(&self, key: &str) -> Result<&str> {
        self.get(key).ok_or_else(|| cfg_err(key, "missing"))
    }

    fn f64(&self, key: &str) -> Result<Option<f64>> {
        self.get(key)
            .map(|v| v.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| cfg_err(key, format!("`{v}` is not a number"))))
            .transpose()
    }

    fn positive(&self, key: &str, default: f64) -> Result<f64> {
        let v = self.f64(key)?.unwrap_or(default);
        if v <= 0.0 {
            return Err(cfg_err(key, "must be positive"));
        }
        Ok(v)
    }

    fn gens(&self, side: &str) -> Result<Vec<Vec<Term>>> {
        let mut out = Vec::new();
        for j in 1.. {
            let key = format!("{side}.gen.{j}");
            match self.get(&key) {
                Some(v) => out.push(parse_channels(v).map_err(|e| cfg_err(&key, e.to_string()))?),
                None => break,
            }
        }
        let extra = self.map.keys().filter(|k| k.starts_with(&format!("{side}.gen."))).count();
        if extra != out.len() {
            return Err(cfg_err(&format!("{side}.gen"), "generators must be numbered 1, 2, ... without gaps"));
        }
        Ok(out)
    }
}

fn list<T>(key: &str, v: &str, f: impl Fn(&str) -> Option<T>) -> Result<Vec<T>> {
    v.split(',')
        .map(|s| f(s.trim()).ok_or_else(|| cfg_err(key, format!("bad entry `{}`", s.trim()))))
        .collect()
}

fn side(f: &Fields, s: &str) -> Result<SideSpec> {
    let wkey = format!("{s}.weight");
    let weight = Formula::parse(f.get(&wkey).unwrap_or("one")).map_err(|e| cfg_err(&wkey, e.to_string()))?;
    let pkey = format!("{s}.profile");
    let profile_src = f.get(&pkey).unwrap_or("1").to_string();
    let profile = MultiplicityProfile::parse(&profile_src).map_err(|e| cfg_err(&pkey, e.to_string()))?;
    let rkey = format!("{s}.reference");
    let reference = match f.get(&rkey).unwrap_or("generator") {
        "generator" => ReferenceId::Generator,
        "lebesgue" => ReferenceId::Lebesgue,
        v => return Err(cfg_err(&rkey, format!("`{v}` is neither generator nor lebesgue"))),
    };
    Ok(SideSpec { weight, profile, profile_src, gens: f.gens(s)?, reference })
}

fn sweep(f: &Fields, name: &str) -> Result<SweepSpec> {
    let key = |field: &str| format!("sweep.{name}.{field}");
    let fk = key("flavor");
    let flavor = Flavor::parse(f.req(&fk)?).ok_or_else(|| cfg_err(&fk, "unknown flavor"))?;
    let xk = key("xi");
    let xi = list(&xk, f.req(&xk)?, |s| s.parse::<f64>().ok().filter(|x| x.is_finite()))?;
    let kk = key("k");
    let k = list(&kk, f.get(&kk).unwrap_or("1"), |s| s.parse::<usize>().ok().filter(|k| *k >= 1).map(|k| k - 1))?;
    let pk = key("probe");
    let probe = parse_channels(f.req(&pk)?).map_err(|e| cfg_err(&pk, e.to_string()))?;
    let ck = key("contraction");
    let contraction = match f.get(&ck) {
        Some(v) => {
            let parts: Vec<&str> = v.split(',').map(str::trim).collect();
            let bad = || cfg_err(&ck, "expected `r0, ratio, n_max`");
            if parts.len() != 3 {
                return Err(bad());
            }
            let r0: f64 = parts[0].parse().map_err(|_| bad())?;
            let ratio: f64 = parts[1].parse().map_err(|_| bad())?;
            let n: usize = parts[2].parse().map_err(|_| bad())?;
            if !(r0 > 0.0) || !(ratio > 0.0 && ratio < 1.0) || n == 0 {
                return Err(cfg_err(&ck, "need r0 > 0, 0 < ratio < 1, n_max ≥ 1"));
            }
            Some((r0, ratio, n))
        }
        None => None,
    };
    let dk = key("depth");
    let depth = match f.get(&dk) {
        Some(v) => Some(v.parse::<usize>().ok().filter(|d| *d >= 1).ok_or_else(|| cfg_err(&dk, "must be a positive integer"))?),
        None => None,
    };
    let lk = key("l");
    let l = match f.get(&lk) {
        Some(v) => list(&lk, v, |s| s.parse::<usize>().ok().filter(|l| *l >= 1))?,
        None => Vec::new(),
    };
    let ek = key("expect");
    let expect = match f.get(&ek).unwrap_or("q") {
        "q" => Expect::QSide,
        "fourier" => Expect::Fourier,
        "change-of-variables" => Expect::ChangeOfVariables,
        v => match v.strip_prefix("rejection:") {
            Some(kind) if !kind.is_empty() => Expect::Rejection(kind.to_string()),
            _ => return Err(cfg_err(&ek, format!("unknown expectation `{v}`"))),
        },
    };
    let mk = key("metric");
    let metric = match f.get(&mk).unwrap_or("abs") {
        "abs" => Metric::Absolute,
        "rel" => Metric::Relative,
        v => return Err(cfg_err(&mk, format!("`{v}` is neither abs nor rel"))),
    };
    let tol = f.positive(&key("tol"), 1e-3)?;
    let martingale = matches!(flavor, Flavor::MartingaleHilbert | Flavor::MartingaleKet);
    if martingale && depth.is_none() {
        return Err(cfg_err(&dk, "martingale flavors need a tree depth"));
    }
    if !martingale && contraction.is_none() {
        return Err(cfg_err(&ck, "this flavor needs a contraction"));
    }
    Ok(SweepSpec { name: name.to_string(), flavor, xi, k, probe, contraction, depth, l, expect, tol, metric })
}

/// Parses and validates a scenario file's contents.
pub fn parse_scenario(text: &str) -> Result<ScenarioConfig> {
    let (map, order) = parse_lines(text)?;
    let f = Fields { map };
    let n_raw = f.req("grid.n")?;
    let n: usize = match n_raw.parse::<i64>() {
        Ok(v) if v >= 2 => v as usize,
        Ok(_) => return Err(cfg_err("grid.n", "need at least 2 grid points")),
        Err(_) => return Err(cfg_err("grid.n", format!("`{n_raw}` is not an integer"))),
    };
    let lower = f.f64("grid.lower")?.ok_or_else(|| cfg_err("grid.lower", "missing"))?;
    let upper = match (f.f64("grid.upper")?, f.f64("grid.period")?) {
        (Some(u), None) => u,
        (None, Some(p)) if p > 0.0 => lower + p * (n - 1) as f64 / n as f64,
        (None, Some(_)) => return Err(cfg_err("grid.period", "must be positive")),
        (Some(_), Some(_)) => return Err(cfg_err("grid.period", "give grid.upper or grid.period, not both")),
        (None, None) => return Err(cfg_err("grid.upper", "missing")),
    };
    if !(upper > lower) {
        return Err(cfg_err("grid.upper", "must exceed grid.lower"));
    }
    if let Some(v) = f.get("p.variant") {
        if v != "multiplication" {
            return Err(cfg_err("p.variant", "only multiplication is supported on the P side"));
        }
    }
    let p = side(&f, "p")?;
    let q = side(&f, "q")?;
    let unitary = UnitaryId::parse(f.req("q.unitary")?).ok_or_else(|| cfg_err("q.unitary", "unknown unitary id"))?;
    if p.gens.is_empty() {
        return Err(cfg_err("p.gen.1", "missing"));
    }
    let m = p.profile.max();
    for (j, g) in p.gens.iter().chain(&q.gens).enumerate() {
        if g.len() != m {
            return Err(cfg_err(
                if j < p.gens.len() { "p.gen" } else { "q.gen" },
                format!("every generator needs {m} channel terms"),
            ));
        }
    }
    if q.gens.is_empty() && !matches!(unitary, UnitaryId::Atomic(_)) {
        return Err(cfg_err("q.gen.1", "missing"));
    }
    let tol = Tolerances {
        forms: f.positive("tol.forms", 1e-8)?,
        lemma: f.positive("tol.lemma", 1e-6)?,
        parseval: f.positive("tol.parseval", 1e-6)?,
        recon: f.positive("tol.recon", 1e-6)?,
        iso: f.positive("tol.iso", 1e-8)?,
    };
    let mut names: Vec<String> = Vec::new();
    for k in &order {
        if let Some(rest) = k.strip_prefix("sweep.") {
            let name = rest.rsplit_once('.').map(|(n, _)| n.to_string()).unwrap_or_default();
            if !names.contains(&name) {
                names.push(name);
            }
        }
    }
    let sweeps = names.iter().map(|n| sweep(&f, n)).collect::<Result<Vec<_>>>()?;
    for s in &sweeps {
        if s.probe.len() != m {
            return Err(cfg_err(&format!("sweep.{}.probe", s.name), format!("needs {m} channel terms")));
        }
    }
    let seed = match f.get("seed") {
        Some(v) => v.parse::<u64>().map_err(|_| cfg_err("seed", "must be a nonnegative integer"))?,
        None => 0,
    };
    Ok(ScenarioConfig {
        name: f.get("out.name").unwrap_or("scenario").to_string(),
        grid: GridSpec { lower, upper, n },
        p,
        q,
        unitary,
        sweeps,
        tol,
        out_dir: f.get("out.dir").map(PathBuf::from),
        seed,
        source: text.to_string(),
    })
}

pub fn load_scenario(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_scenario(&text)
}
