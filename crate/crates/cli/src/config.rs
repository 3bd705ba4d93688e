//! Experiment configs: `key = value` lines with optional `[params]` and
//! `[thresholds]` sections and `#` comments. Parsing collects every error in
//! the file before reporting.
//!
//! ```text
//! experiment = mixing-scaling
//! reps = 200
//! master_seed = 7
//!
//! [params]
//! N = 8, 16, 32
//! p = 0.75
//!
//! [thresholds]
//! slope_max = 1.3
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use serde::Serialize;
use thiserror::Error;

use asep_core::observables::DriftKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    MixingScaling,
    HittingTail,
    Drift,
    BlockingStationarity,
    ProofEvents,
    ExactCrosscheck,
    CoupleDistance,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::MixingScaling,
        Experiment::HittingTail,
        Experiment::Drift,
        Experiment::BlockingStationarity,
        Experiment::ProofEvents,
        Experiment::ExactCrosscheck,
        Experiment::CoupleDistance,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Experiment::MixingScaling => "mixing-scaling",
            Experiment::HittingTail => "hitting-tail",
            Experiment::Drift => "drift",
            Experiment::BlockingStationarity => "blocking-stationarity",
            Experiment::ProofEvents => "proof-events",
            Experiment::ExactCrosscheck => "exact-crosscheck",
            Experiment::CoupleDistance => "couple-distance",
        }
    }

    pub fn from_tag(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.tag() == s)
    }

    fn params(self) -> &'static [&'static str] {
        match self {
            Experiment::MixingScaling => &["N", "p", "cap_factor"],
            Experiment::HittingTail => &["family", "N", "p", "t", "D", "cap_factor"],
            Experiment::Drift => &["process", "p", "t"],
            Experiment::BlockingStationarity => &["start", "N", "p", "t"],
            Experiment::ProofEvents => &["C", "N", "p"],
            Experiment::ExactCrosscheck => &["chain", "N", "k", "p"],
            Experiment::CoupleDistance => &["p", "t", "n_max"],
        }
    }

    fn thresholds(self) -> &'static [&'static str] {
        match self {
            Experiment::MixingScaling => &["ratio_min", "ratio_max", "slope_min", "slope_max"],
            Experiment::HittingTail => &["slope_min", "r2_min", "scaled_ratio_max"],
            Experiment::Drift => &["mean_tol", "var_factor"],
            Experiment::BlockingStationarity => &["alpha"],
            Experiment::ProofEvents => &["sigmas"],
            Experiment::ExactCrosscheck => &["weights_tol", "tv_max", "ratio_tol"],
            Experiment::CoupleDistance => &["slope_max", "r2_min", "alpha"],
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Start family of a hitting-time tail.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    ShiftedBlock,
    Blocking,
}

/// Exact chain family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Chain {
    Cards,
    Exclusion,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Params {
    #[serde(rename = "N")]
    pub n: Vec<usize>,
    pub k: Option<usize>,
    pub p: Vec<f64>,
    pub t: Vec<f64>,
    #[serde(rename = "C")]
    pub c: Option<f64>,
    #[serde(rename = "D")]
    pub d: Option<f64>,
    /// Hitting caps are cap_factor · N / (2p - 1).
    pub cap_factor: f64,
    pub n_max: u32,
    pub family: Option<Family>,
    pub process: DriftKind,
    /// `None` starts the stationarity check from Ψ, `Some(N)` from I_N.
    pub block_start: Option<usize>,
    pub chain: Option<Chain>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub reps: usize,
    pub master_seed: u64,
    /// 0 means one per available core.
    pub threads: usize,
    pub output: String,
    pub output_root: PathBuf,
    pub params: Params,
    pub thresholds: BTreeMap<String, f64>,
    #[serde(skip)]
    pub text: String,
}

impl ExperimentConfig {
    pub fn threshold(&self, key: &str) -> Option<f64> {
        self.thresholds.get(key).copied()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(l) = self.line {
            write!(f, "line {l}: ")?;
        }
        if let Some(k) = &self.key {
            write!(f, "`{k}`: ")?;
        }
        f.write_str(&self.message)
    }
}

/// Every problem found in one config.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

const TOP: [&str; 6] = ["experiment", "reps", "master_seed", "threads", "output", "output_root"];

#[derive(Clone, Debug)]
struct Entry {
    value: String,
    line: usize,
}

struct Checker {
    entries: BTreeMap<String, Entry>,
    errors: Vec<ConfigError>,
}

impl Checker {
    fn err(&mut self, key: &str, message: impl Into<String>) {
        let line = self.entries.get(key).map(|e| e.line);
        self.errors.push(ConfigError {
            line,
            key: Some(short(key).to_string()),
            message: message.into(),
        });
    }

    fn raw(&self, key: &str) -> Option<String> {
        self.entries.get(key).map(|e| e.value.clone())
    }

    fn required(&mut self, key: &str) -> Option<String> {
        let v = self.raw(key);
        if v.is_none() {
            self.err(key, "missing required key");
        }
        v
    }

    fn forbid(&mut self, key: &str, why: &str) {
        if self.entries.contains_key(key) {
            self.err(key, format!("not used {why}"));
        }
    }

    fn parse<T: std::str::FromStr>(&mut self, key: &str, v: &str, what: &str) -> Option<T> {
        match v.trim().parse() {
            Ok(x) => Some(x),
            Err(_) => {
                self.err(key, format!("`{}` is not {what}", v.trim()));
                None
            }
        }
    }

    fn list<T: std::str::FromStr>(&mut self, key: &str, what: &str) -> Option<Vec<T>> {
        let raw = self.raw(key)?;
        let body = raw.trim().trim_start_matches('[').trim_end_matches(']');
        if let Some(args) = body.strip_prefix("geom(").and_then(|b| b.strip_suffix(')')) {
            return self.geom(key, args);
        }
        let mut out = Vec::new();
        let mut ok = true;
        for item in body.split(',') {
            match self.parse(key, item, what) {
                Some(x) => out.push(x),
                None => ok = false,
            }
        }
        ok.then_some(out)
    }

    /// `geom(a, b, n)`: n points from a to b, equally spaced in log.
    fn geom<T: std::str::FromStr>(&mut self, key: &str, args: &str) -> Option<Vec<T>> {
        let parts: Vec<&str> = args.split(',').map(str::trim).collect();
        let parsed = match parts.as_slice() {
            [a, b, n] => match (a.parse::<f64>(), b.parse::<f64>(), n.parse::<usize>()) {
                (Ok(a), Ok(b), Ok(n)) if a > 0.0 && b > a && n >= 2 => Some((a, b, n)),
                _ => None,
            },
            _ => None,
        };
        let Some((a, b, n)) = parsed else {
            self.err(key, "geom(a, b, n) needs 0 < a < b and n >= 2");
            return None;
        };
        let grid: Vec<String> = (0..n)
            .map(|i| (a * (b / a).powf(i as f64 / (n - 1) as f64)).to_string())
            .collect();
        let mut out = Vec::new();
        for g in grid {
            out.push(self.parse(key, &g, "a number")?);
        }
        Some(out)
    }

    fn single<T: std::str::FromStr + Clone>(&mut self, key: &str, what: &str) -> Option<T> {
        let v: Vec<T> = self.list(key, what)?;
        if v.len() != 1 {
            self.err(key, "expects a single value");
            return None;
        }
        Some(v[0].clone())
    }

    fn check_all<T: Copy>(&mut self, key: &str, v: &[T], ok: impl Fn(T) -> bool, msg: &str) -> bool {
        if v.iter().all(|&x| ok(x)) {
            true
        } else {
            self.err(key, msg.to_string());
            false
        }
    }
}

fn short(key: &str) -> &str {
    key.rsplit('.').next().unwrap_or(key)
}

/// Parses and validates a config. `text` is kept for hashing.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigErrors> {
    let mut errors = Vec::new();
    let mut entries: BTreeMap<String, Entry> = BTreeMap::new();
    let mut section = String::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if let Some(name) = body.strip_prefix('[').and_then(|b| b.strip_suffix(']')) {
            let name = name.trim();
            if name == "params" || name == "thresholds" {
                section = name.to_string();
            } else {
                errors.push(ConfigError {
                    line: Some(line),
                    key: None,
                    message: format!("unknown section [{name}]"),
                });
                section = format!("?{name}");
            }
            continue;
        }
        let Some((k, v)) = body.split_once('=') else {
            errors.push(ConfigError {
                line: Some(line),
                key: None,
                message: format!("expected `key = value`, got `{body}`"),
            });
            continue;
        };
        let (k, v) = (k.trim(), v.trim());
        if section.starts_with('?') {
            continue;
        }
        if k.is_empty() || v.is_empty() {
            errors.push(ConfigError {
                line: Some(line),
                key: (!k.is_empty()).then(|| k.to_string()),
                message: "empty key or value".into(),
            });
            continue;
        }
        let qualified = if section.is_empty() {
            k.to_string()
        } else {
            format!("{section}.{k}")
        };
        if let Some(first) = entries.get(&qualified) {
            errors.push(ConfigError {
                line: Some(line),
                key: Some(k.to_string()),
                message: format!(
                    "duplicate key, first set at line {} and again at line {line}",
                    first.line
                ),
            });
            continue;
        }
        entries.insert(
            qualified,
            Entry {
                value: v.to_string(),
                line,
            },
        );
    }

    let mut c = Checker { entries, errors };
    let experiment = c.required("experiment").and_then(|v| {
        let e = Experiment::from_tag(&v);
        if e.is_none() {
            let known: Vec<&str> = Experiment::ALL.iter().map(|e| e.tag()).collect();
            c.err(
                "experiment",
                format!("unknown experiment `{v}` (known: {})", known.join(", ")),
            );
        }
        e
    });

    let keys: Vec<String> = c.entries.keys().cloned().collect();
    for key in &keys {
        let known = match key.split_once('.') {
            None => TOP.contains(&key.as_str()),
            Some(("params", k)) => experiment.is_none_or(|e| e.params().contains(&k)),
            Some(("thresholds", k)) => experiment.is_none_or(|e| e.thresholds().contains(&k)),
            _ => false,
        };
        if !known {
            let scope = match (key.split_once('.'), experiment) {
                (Some((s, _)), Some(e)) => format!("unknown {s} key for {e}"),
                _ => "unknown key".to_string(),
            };
            c.err(key, scope);
        }
    }

    let reps = c
        .required("reps")
        .and_then(|v| c.parse::<usize>("reps", &v, "a nonnegative integer"));
    let master_seed = c
        .required("master_seed")
        .and_then(|v| c.parse::<u64>("master_seed", &v, "an unsigned 64-bit integer"));
    let threads = match c.raw("threads") {
        Some(v) => c.parse::<usize>("threads", &v, "a nonnegative integer"),
        None => Some(0),
    };
    let output = c.raw("output");
    if let Some(o) = &output {
        if o.contains(['/', '\\']) || o == "." || o == ".." {
            c.err("output", "must be a plain directory name");
        }
    }
    let output_root = PathBuf::from(c.raw("output_root").unwrap_or_else(|| "results".into()));

    let mut thresholds = BTreeMap::new();
    for key in keys.iter().filter(|k| k.starts_with("thresholds.")) {
        let v = c.raw(key).unwrap_or_default();
        if let Some(x) = c.parse::<f64>(key, &v, "a number") {
            let name = short(key).to_string();
            let ok = match name.as_str() {
                "alpha" => x > 0.0 && x < 1.0,
                "slope_min" | "slope_max" => x.is_finite(),
                _ => x.is_finite() && x >= 0.0,
            };
            if ok {
                thresholds.insert(name, x);
            } else {
                c.err(key, format!("{x} out of range"));
            }
        }
    }

    let params = experiment.and_then(|e| params_for(e, &mut c));

    if !c.errors.is_empty() {
        c.errors.sort_by_key(|e| e.line.unwrap_or(usize::MAX));
        return Err(ConfigErrors(c.errors));
    }
    let experiment = experiment.expect("checked");
    Ok(ExperimentConfig {
        experiment,
        reps: reps.expect("checked"),
        master_seed: master_seed.expect("checked"),
        threads: threads.expect("checked"),
        output: output.unwrap_or_else(|| experiment.tag().to_string()),
        output_root,
        params: params.expect("checked"),
        thresholds,
        text: text.to_string(),
    })
}

fn params_for(e: Experiment, c: &mut Checker) -> Option<Params> {
    let before = c.errors.len();
    let mut out = Params {
        n: Vec::new(),
        k: None,
        p: Vec::new(),
        t: Vec::new(),
        c: None,
        d: None,
        cap_factor: 50.0,
        n_max: 12,
        family: None,
        process: DriftKind::Beta2to1,
        block_start: None,
        chain: None,
    };
    let prob = |x: f64| (0.0..=1.0).contains(&x);
    let biased = |x: f64| x > 0.5 && x <= 1.0;
    let nonneg = |x: f64| x >= 0.0 && x.is_finite();

    if let Some(v) = c.raw("params.cap_factor") {
        if let Some(x) = c.parse::<f64>("params.cap_factor", &v, "a number") {
            if x > 0.0 && x.is_finite() {
                out.cap_factor = x;
            } else {
                c.err("params.cap_factor", "must be positive");
            }
        }
    }

    match e {
        Experiment::MixingScaling => {
            if c.required("params.N").is_some() {
                if let Some(n) = c.list::<usize>("params.N", "an integer") {
                    c.check_all("params.N", &n, |x| x >= 2, "every N must be at least 2");
                    out.n = n;
                }
            }
            if c.required("params.p").is_some() {
                if let Some(p) = c.list::<f64>("params.p", "a number") {
                    c.check_all(
                        "params.p",
                        &p,
                        |x| prob(x) && x != 0.5,
                        "every p must lie in [0, 1] and differ from 1/2",
                    );
                    out.p = p;
                }
            }
        }
        Experiment::HittingTail => {
            if let Some(v) = c.required("params.family") {
                out.family = match v.as_str() {
                    "shifted-block" => Some(Family::ShiftedBlock),
                    "blocking" => Some(Family::Blocking),
                    _ => {
                        c.err("params.family", format!("`{v}` is not shifted-block or blocking"));
                        None
                    }
                };
            }
            if c.required("params.p").is_some() {
                if let Some(p) = c.list::<f64>("params.p", "a number") {
                    c.check_all("params.p", &p, biased, "every p must lie in (1/2, 1]");
                    out.p = p;
                }
            }
            match out.family {
                Some(Family::ShiftedBlock) => {
                    if c.required("params.N").is_some() {
                        if let Some(n) = c.list::<usize>("params.N", "an integer") {
                            c.check_all("params.N", &n, |x| x >= 1, "every N must be at least 1");
                            out.n = n;
                        }
                    }
                    match (c.raw("params.t"), c.raw("params.D")) {
                        (Some(_), Some(_)) => c.err("params.D", "give either t or D, not both"),
                        (None, None) => c.err("params.t", "missing required key (or give D)"),
                        (Some(_), None) => out.t = grid(c)?,
                        (None, Some(_)) => {
                            let d = c.single::<f64>("params.D", "a number");
                            if d.is_some_and(|d| d <= 0.0) {
                                c.err("params.D", "must be positive");
                            }
                            out.d = d;
                        }
                    }
                }
                Some(Family::Blocking) => {
                    c.forbid("params.N", "by the blocking family");
                    c.forbid("params.D", "by the blocking family");
                    if c.required("params.t").is_some() {
                        out.t = grid(c)?;
                    }
                }
                None => {}
            }
        }
        Experiment::Drift => {
            if let Some(v) = c.raw("params.process") {
                match v.as_str() {
                    "beta_2to1" => out.process = DriftKind::Beta2to1,
                    "beta_2to0" => out.process = DriftKind::Beta2to0,
                    _ => c.err("params.process", format!("`{v}` is not beta_2to1 or beta_2to0")),
                }
            }
            if c.required("params.p").is_some() {
                if let Some(p) = c.list::<f64>("params.p", "a number") {
                    c.check_all("params.p", &p, prob, "every p must lie in [0, 1]");
                    out.p = p;
                }
            }
            if c.required("params.t").is_some() {
                if let Some(t) = c.single::<f64>("params.t", "a number") {
                    c.check_all("params.t", &[t], |x| x >= 1.0 && x.is_finite(), "t must be at least 1");
                    out.t = vec![t];
                }
            }
        }
        Experiment::BlockingStationarity => {
            match c.raw("params.start").as_deref() {
                None | Some("blocking") => c.forbid("params.N", "unless start = shifted-block"),
                Some("shifted-block") => {
                    if c.required("params.N").is_some() {
                        if let Some(n) = c.single::<usize>("params.N", "an integer") {
                            c.check_all("params.N", &[n], |x| x >= 1, "N must be at least 1");
                            out.block_start = Some(n);
                        }
                    }
                }
                Some(v) => c.err("params.start", format!("`{v}` is not blocking or shifted-block")),
            }
            if c.required("params.p").is_some() {
                if let Some(p) = c.list::<f64>("params.p", "a number") {
                    c.check_all("params.p", &p, biased, "every p must lie in (1/2, 1]");
                    out.p = p;
                }
            }
            if c.required("params.t").is_some() {
                if let Some(t) = c.single::<f64>("params.t", "a number") {
                    c.check_all("params.t", &[t], nonneg, "t must be nonnegative");
                    out.t = vec![t];
                }
            }
        }
        Experiment::ProofEvents => {
            if c.required("params.C").is_some() {
                out.c = c.single::<f64>("params.C", "a number");
                if out.c.is_some_and(|x| !nonneg(x)) {
                    c.err("params.C", "must be nonnegative");
                }
            }
            if c.required("params.N").is_some() {
                if let Some(n) = c.single::<usize>("params.N", "an integer") {
                    c.check_all("params.N", &[n], |x| x >= 2, "N must be at least 2");
                    out.n = vec![n];
                }
            }
            if c.required("params.p").is_some() {
                if let Some(p) = c.single::<f64>("params.p", "a number") {
                    c.check_all("params.p", &[p], |x| x > 0.5 && x <= 1.0, "p must lie in (1/2, 1]");
                    out.p = vec![p];
                }
            }
        }
        Experiment::ExactCrosscheck => {
            if let Some(v) = c.required("params.chain") {
                out.chain = match v.as_str() {
                    "cards" => Some(Chain::Cards),
                    "exclusion" => Some(Chain::Exclusion),
                    _ => {
                        c.err("params.chain", format!("`{v}` is not cards or exclusion"));
                        None
                    }
                };
            }
            if c.required("params.N").is_some() {
                if let Some(n) = c.list::<usize>("params.N", "an integer") {
                    let cap = if out.chain == Some(Chain::Cards) {
                        asep_core::oracle::MAX_CARDS
                    } else {
                        24
                    };
                    c.check_all(
                        "params.N",
                        &n,
                        |x| (2..=cap).contains(&x),
                        &format!("every N must lie in [2, {cap}] for the exact chain"),
                    );
                    out.n = n;
                }
            }
            match out.chain {
                Some(Chain::Exclusion) => {
                    if c.required("params.k").is_some() {
                        if let Some(k) = c.single::<usize>("params.k", "an integer") {
                            let ns = out.n.clone();
                            c.check_all("params.k", &ns, |n| k >= 1 && k < n, "need 1 <= k < N for every N");
                            out.k = Some(k);
                        }
                    }
                }
                Some(Chain::Cards) => c.forbid("params.k", "by the card chain"),
                None => {}
            }
            if c.required("params.p").is_some() {
                if let Some(p) = c.list::<f64>("params.p", "a number") {
                    c.check_all("params.p", &p, prob, "every p must lie in [0, 1]");
                    out.p = p;
                }
            }
        }
        Experiment::CoupleDistance => {
            if c.required("params.p").is_some() {
                if let Some(p) = c.single::<f64>("params.p", "a number") {
                    c.check_all("params.p", &[p], prob, "p must lie in [0, 1]");
                    out.p = vec![p];
                }
            }
            if c.required("params.t").is_some() {
                if let Some(t) = c.single::<f64>("params.t", "a number") {
                    c.check_all("params.t", &[t], nonneg, "t must be nonnegative");
                    out.t = vec![t];
                }
            }
            if let Some(v) = c.raw("params.n_max") {
                if let Some(n) = c.parse::<u32>("params.n_max", &v, "a nonnegative integer") {
                    out.n_max = n;
                }
            }
        }
    }
    (c.errors.len() == before).then_some(out)
}

fn grid(c: &mut Checker) -> Option<Vec<f64>> {
    let t = c.list::<f64>("params.t", "a number")?;
    let ok = t.iter().all(|x| x.is_finite() && *x >= 0.0) && t.windows(2).all(|w| w[0] < w[1]);
    if !ok {
        c.err("params.t", "grid must be nonnegative and strictly increasing");
        return None;
    }
    Some(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "experiment = mixing-scaling\nreps = 10\nmaster_seed = 1\n[params]\nN = 8, 16\np = 0.75\n";

    #[test]
    fn minimal_mixing_config_parses() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.experiment, Experiment::MixingScaling);
        assert_eq!(c.params.n, vec![8, 16]);
        assert_eq!(c.params.p, vec![0.75]);
        assert_eq!(c.output, "mixing-scaling");
        assert_eq!(c.threads, 0);
    }

    #[test]
    fn out_of_range_p_names_the_key() {
        let e = parse_config(&MINIMAL.replace("p = 0.75", "p = 1.5")).unwrap_err();
        assert_eq!(e.0.len(), 1);
        assert_eq!(e.0[0].key.as_deref(), Some("p"));
        assert_eq!(e.0[0].line, Some(6));
    }

    #[test]
    fn duplicates_report_both_lines() {
        let e = parse_config(&format!("{MINIMAL}p = 0.6\n")).unwrap_err();
        assert!(
            e.0[0].message.contains("line 6") && e.0[0].message.contains("line 7"),
            "{e}"
        );
    }

    #[test]
    fn all_errors_are_collected() {
        let text = "experiment = drift\nreps = -1\nbogus = 3\n[params]\np = 2\nN = 4\n[weird]\nx = 1\n";
        let e = parse_config(text).unwrap_err();
        let s = e.to_string();
        for needle in ["reps", "bogus", "`p`", "`N`", "[weird]", "`t`: missing"] {
            assert!(s.contains(needle), "{needle} missing from:\n{s}");
        }
    }

    #[test]
    fn geometric_grids_expand() {
        let text = "experiment = hitting-tail\nreps = 1\nmaster_seed = 1\n[params]\nfamily = blocking\np = 0.8\nt = geom(0.5, 50, 5)\n";
        let c = parse_config(text).unwrap();
        assert_eq!(c.params.t.len(), 5);
        assert!((c.params.t[4] - 50.0).abs() < 1e-9 && (c.params.t[2] - 5.0).abs() < 1e-9);
    }

    #[test]
    fn blocking_family_rejects_n() {
        let text = "experiment = hitting-tail\nreps = 1\nmaster_seed = 1\n[params]\nfamily = blocking\np = 0.8\nt = 1, 2\nN = 4\n";
        assert!(parse_config(text).unwrap_err().to_string().contains("`N`"));
    }
}
