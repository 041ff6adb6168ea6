//! Flat key-value config files: one `key = value` per line, `#` comments,
//! unknown keys rejected.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{anyhow, bail, Context};
use latflow::capacity::DistributionSpec;
use latflow::estimator::{ExperimentPlan, Rung};

#[derive(Clone, Debug, PartialEq)]
pub enum Verification {
    Off,
    LemmaChecks,
    Full,
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub plan: ExperimentPlan,
    pub out_dir: String,
    pub formats: Vec<String>,
    pub verification: Verification,
    pub workers: usize,
    pub verify_realizations: u32,
    pub verify_gamma_p: f64,
    pub tamper: bool,
    /// Raw key-value pairs, echoed into the manifest.
    pub raw: BTreeMap<String, String>,
}

const KNOWN_KEYS: &[&str] = &[
    "dist",
    "d",
    "rungs",
    "replicates",
    "seed",
    "epsilon",
    "t",
    "delta",
    "growth_delta",
    "margin",
    "p_c",
    "beta_bar",
    "workers",
    "out",
    "formats",
    "verification",
    "verify_realizations",
    "verify_gamma_p",
    "tamper",
];

pub fn parse_file(path: &Path) -> anyhow::Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    parse_str(&text)
}

pub fn parse_str(text: &str) -> anyhow::Result<RunConfig> {
    let mut raw: BTreeMap<String, String> = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("line {}: expected `key = value`", lineno + 1))?;
        let key = key.trim().to_string();
        if !KNOWN_KEYS.contains(&key.as_str()) {
            bail!("unknown key `{key}` on line {}", lineno + 1);
        }
        if raw.insert(key.clone(), value.trim().to_string()).is_some() {
            bail!("duplicate key `{key}` on line {}", lineno + 1);
        }
    }

    let get = |k: &str| raw.get(k).map(|s| s.as_str());
    let dist = DistributionSpec::parse(get("dist").ok_or_else(|| anyhow!("missing key `dist`"))?)
        .map_err(|e| anyhow!("{e}"))?;
    let dim: usize = get("d")
        .ok_or_else(|| anyhow!("missing key `d`"))?
        .parse()
        .context("key `d`")?;
    let rungs = parse_rungs(get("rungs").ok_or_else(|| anyhow!("missing key `rungs`"))?)?;
    let replicates: u32 = get("replicates").unwrap_or("10").parse().context("key `replicates`")?;

    let mut plan = ExperimentPlan::new(dist, dim, rungs, replicates);
    if let Some(v) = get("seed") {
        plan.master_seed = v.parse().context("key `seed`")?;
    }
    if let Some(v) = get("epsilon") {
        plan.epsilon = v.parse().context("key `epsilon`")?;
    }
    if let Some(v) = get("t") {
        plan.t = v.parse().context("key `t`")?;
    }
    if let Some(v) = get("delta") {
        plan.delta = v.parse().context("key `delta`")?;
    }
    if let Some(v) = get("growth_delta") {
        plan.growth_delta = v.parse().context("key `growth_delta`")?;
    }
    if let Some(v) = get("margin") {
        plan.margin = if v == "auto" {
            None
        } else {
            Some(v.parse().context("key `margin`")?)
        };
    }
    if let Some(v) = get("p_c") {
        plan.p_c_reference = v.parse().context("key `p_c`")?;
    }
    if let Some(v) = get("beta_bar") {
        plan.beta_bar = v.parse().context("key `beta_bar`")?;
    }
    plan.validate().map_err(|e| anyhow!("{e}"))?;

    let verification = match get("verification").unwrap_or("off") {
        "off" => Verification::Off,
        "lemma-checks" => Verification::LemmaChecks,
        "full" => Verification::Full,
        other => bail!("verification must be off | lemma-checks | full, got `{other}`"),
    };
    let workers: usize = get("workers").unwrap_or("1").parse().context("key `workers`")?;
    let verify_realizations: u32 = get("verify_realizations")
        .unwrap_or("100")
        .parse()
        .context("key `verify_realizations`")?;
    let verify_gamma_p: f64 = get("verify_gamma_p")
        .unwrap_or("0.2")
        .parse()
        .context("key `verify_gamma_p`")?;
    let tamper: bool = get("tamper").unwrap_or("false").parse().context("key `tamper`")?;

    Ok(RunConfig {
        plan,
        out_dir: get("out").unwrap_or("out").to_string(),
        formats: get("formats")
            .unwrap_or("jsonl,csv")
            .split(',')
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect(),
        verification,
        workers: workers.max(1),
        verify_realizations,
        verify_gamma_p,
        tamper,
        raw,
    })
}

/// `rungs = 8:8, 16:16` or `4x4:4` for multi-side boxes.
fn parse_rungs(s: &str) -> anyhow::Result<Vec<Rung>> {
    let mut out = Vec::new();
    for part in s.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let (k, m) = part
            .split_once(':')
            .ok_or_else(|| anyhow!("rung `{part}`: expected k1[xk2..]:m"))?;
        let sides: Result<Vec<u64>, _> = k.split('x').map(|x| x.trim().parse::<u64>()).collect();
        out.push(Rung {
            sides: sides.with_context(|| format!("rung `{part}` sides"))?,
            height: m.trim().parse().with_context(|| format!("rung `{part}` height"))?,
        });
    }
    if out.is_empty() {
        bail!("empty rung list");
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_parses() {
        let cfg = parse_str(
            "dist = dirac(1)\nd = 2\nrungs = 4:4, 8:8\nreplicates = 3\nseed = 5\n",
        )
        .unwrap();
        assert_eq!(cfg.plan.rungs.len(), 2);
        assert_eq!(cfg.plan.master_seed, 5);
        assert_eq!(cfg.verification, Verification::Off);
    }

    #[test]
    fn unknown_key_rejected() {
        let err = parse_str("dist = dirac(1)\nd = 2\nrungs = 4:4\nfrobnicate = 1\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("unknown key"), "{err}");
    }

    #[test]
    fn multi_side_rungs() {
        let cfg = parse_str("dist = dirac(1)\nd = 3\nrungs = 4x6:4\n").unwrap();
        assert_eq!(cfg.plan.rungs[0].sides, vec![4, 6]);
        assert_eq!(cfg.plan.rungs[0].height, 4);
    }
}
