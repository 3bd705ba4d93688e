//! `asep oracle <kind> key=value ...`: exact quantities as JSON.

use std::collections::BTreeMap;

use serde_json::{json, Value};

use asep_core::configs::ZConfig;
use asep_core::oracle::{
    build_generator, discrete_mixing_time, exact_mixing_time, spectral_gap, stationary_distribution, z_hitting,
    BlockingLaw, ChainKind, ALL_PAIRS_LIMIT, GAP_LIMIT,
};

use crate::error::{CliError, Context, Result};

pub const KINDS: [&str; 4] = ["cards", "exclusion", "blocking", "z-hitting"];

struct Args(BTreeMap<String, String>);

impl Args {
    fn parse(kind: &str, raw: &[String], allowed: &[&str]) -> Result<Self> {
        let mut map = BTreeMap::new();
        for a in raw {
            let (k, v) = a
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("expected key=value, got `{a}`")))?;
            if !allowed.contains(&k) {
                return Err(CliError::Usage(format!(
                    "unknown parameter `{k}` for {kind} (expected {})",
                    allowed.join(", ")
                )));
            }
            if map.insert(k.to_string(), v.to_string()).is_some() {
                return Err(CliError::Usage(format!("`{k}` given twice")));
            }
        }
        Ok(Self(map))
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let v = self
            .0
            .get(key)
            .ok_or_else(|| CliError::Usage(format!("missing `{key}=`")))?;
        v.parse()
            .map_err(|_| CliError::Usage(format!("`{key}={v}` is not valid")))
    }

    fn get_or<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        if self.0.contains_key(key) {
            self.get(key)
        } else {
            Ok(default)
        }
    }
}

pub fn oracle(kind: &str, raw: &[String]) -> Result<Value> {
    match kind {
        "cards" => {
            let a = Args::parse(kind, raw, &["N", "p"])?;
            chain(ChainKind::Cards {
                n: a.get("N")?,
                p: a.get("p")?,
            })
        }
        "exclusion" => {
            let a = Args::parse(kind, raw, &["N", "k", "p"])?;
            chain(ChainKind::Exclusion {
                n: a.get("N")?,
                k: a.get("k")?,
                p: a.get("p")?,
            })
        }
        "blocking" => {
            let a = Args::parse(kind, raw, &["p", "n_max"])?;
            let p: f64 = a.get("p")?;
            let n_max: i64 = a.get_or("n_max", 10)?;
            let law = BlockingLaw::new(p).context(|| "blocking".into())?;
            let tail: Vec<Value> = (0..=n_max)
                .map(|n| Ok(json!({ "n": n, "P(rightmost particle > n)": law.tail(n).context(|| "tail".into())? })))
                .collect::<Result<_>>()?;
            let sites: Vec<Value> = (-n_max..=n_max)
                .map(|i| json!({ "i": i, "P(eta_i = 1)": law.site(i) }))
                .collect();
            Ok(json!({
                "p": p,
                "mu(A)": law.mu_a(),
                "Psi(ground)": law.ground(),
                "tail": tail,
                "sites": sites,
            }))
        }
        "z-hitting" => {
            let a = Args::parse(kind, raw, &["N", "p", "tol"])?;
            let n: usize = a.get("N")?;
            let p: f64 = a.get("p")?;
            let tol: f64 = a.get_or("tol", 1e-10)?;
            let start = ZConfig::shifted_block(n).context(|| "start".into())?;
            let h = z_hitting(&start, p, tol).context(|| format!("E[H(I_{n})]"))?;
            Ok(json!({
                "N": n,
                "p": p,
                "expected_hitting_time": h.expected,
                "boundary_prob": h.boundary_prob,
                "max_energy": h.max_energy,
                "states": h.states,
            }))
        }
        _ => Err(CliError::Usage(format!(
            "unknown oracle `{kind}` (expected {})",
            KINDS.join(", ")
        ))),
    }
}

fn chain(kind: ChainKind) -> Result<Value> {
    let what = || format!("{kind:?}");
    let (space, gen) = build_generator(kind).context(what)?;
    let st = stationary_distribution(&gen).context(what)?;
    let pi: serde_json::Map<String, Value> = space
        .labels
        .iter()
        .cloned()
        .zip(st.pi.iter().map(|&x| json!(x)))
        .collect();
    let mut out = json!({
        "chain": kind,
        "states": space.len(),
        "stationary": pi,
        "residual": st.residual,
    });
    if space.len() <= ALL_PAIRS_LIMIT {
        let tau = exact_mixing_time(&gen).context(what)?;
        out["tau_1"] = json!(tau);
        out["discrete_steps"] = json!(discrete_mixing_time(&gen, kind.edges(), 10_000_000).context(what)?);
    }
    if space.len() > 1 && space.len() <= GAP_LIMIT {
        out["spectral_gap"] = json!(spectral_gap(&gen).context(what)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exclusion_weights_for_three_sites() {
        let v = oracle(
            "exclusion",
            &["N=3".into(), "k=1".into(), "p=0.6666666666666666".into()],
        )
        .unwrap();
        let pi = &v["stationary"];
        assert!((pi["100"].as_f64().unwrap() - 4.0 / 7.0).abs() < 1e-9, "{v}");
        assert!((pi["001"].as_f64().unwrap() - 1.0 / 7.0).abs() < 1e-9);
    }

    #[test]
    fn unknown_keys_are_usage_errors() {
        assert!(matches!(oracle("cards", &["M=3".into()]), Err(CliError::Usage(_))));
        assert!(matches!(oracle("dice", &[]), Err(CliError::Usage(_))));
    }
}
