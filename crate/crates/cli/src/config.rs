//! Plain-text scenario configuration: one `key = value` per line, `#`
//! comments, flat namespace. Flags mirror keys and always win in the merge.

use phasesep::FlowVariant;
use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

/// Scenario settings after config parsing and flag merging; every field is
/// optional so each command can demand exactly what it needs.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Scenario {
    pub m: Option<f64>,
    pub gamma: Option<f64>,
    pub k_t: Option<f64>,
    pub omega_well: Option<f64>,
    pub omega_c: Option<f64>,
    pub dpp: Option<f64>,
    pub dqq: Option<f64>,
    pub dqp: Option<f64>,
    pub t_max: Option<f64>,
    pub samples: Option<usize>,
    pub variant: Option<FlowVariant>,
    pub seed: Option<u64>,
    pub minimal: Option<bool>,
    pub r: Option<f64>,
    pub gamma_t0: Option<Vec<f64>>,
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    v.parse::<T>()
        .map_err(|e| format!("config key `{key}`: bad value `{v}`: {e}"))
}

impl Scenario {
    /// Parses `key = value` lines. Unknown keys are an error (misspelled
    /// scenarios should not pass silently).
    pub fn parse_text(text: &str) -> Result<Self, String> {
        let mut map = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected `key = value`", lineno + 1))?;
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
        let mut s = Scenario::default();
        for (k, v) in map {
            match k.replace('-', "_").as_str() {
                "m" => s.m = Some(parse_num("m", &v)?),
                "gamma" => s.gamma = Some(parse_num("gamma", &v)?),
                "kT" | "kt" => s.k_t = Some(parse_num("kT", &v)?),
                "Omega" => s.omega_well = Some(parse_num("Omega", &v)?),
                "omega_c" => s.omega_c = Some(parse_num("omega_c", &v)?),
                "dpp" => s.dpp = Some(parse_num("dpp", &v)?),
                "dqq" => s.dqq = Some(parse_num("dqq", &v)?),
                "dqp" => s.dqp = Some(parse_num("dqp", &v)?),
                "t_max" => s.t_max = Some(parse_num("t_max", &v)?),
                "samples" => s.samples = Some(parse_num("samples", &v)?),
                "seed" => s.seed = Some(parse_num("seed", &v)?),
                "r" => s.r = Some(parse_num("r", &v)?),
                "minimal" => {
                    s.minimal = Some(match v.as_str() {
                        "true" | "1" => true,
                        "false" | "0" => false,
                        other => return Err(format!("config key `minimal`: bad value `{other}`")),
                    })
                }
                "variant" => {
                    s.variant = Some(FlowVariant::from_str(&v).map_err(|e| format!("config: {e}"))?)
                }
                "gamma_t0" => {
                    let list = v
                        .split(',')
                        .filter(|p| !p.trim().is_empty())
                        .map(|p| parse_num::<f64>("gamma_t0", p.trim()))
                        .collect::<Result<Vec<f64>, _>>()?;
                    s.gamma_t0 = Some(list);
                }
                other => return Err(format!("unknown config key `{other}`")),
            }
        }
        Ok(s)
    }

    pub fn from_file(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        Self::parse_text(&text)
    }

    /// Overlays `flags` on top of `self`; any flag that is set wins.
    pub fn merged_with(mut self, flags: &Scenario) -> Self {
        macro_rules! take {
            ($f:ident) => {
                if flags.$f.is_some() {
                    self.$f = flags.$f.clone();
                }
            };
        }
        take!(m);
        take!(gamma);
        take!(k_t);
        take!(omega_well);
        take!(omega_c);
        take!(dpp);
        take!(dqq);
        take!(dqp);
        take!(t_max);
        take!(samples);
        take!(variant);
        take!(seed);
        take!(minimal);
        take!(r);
        take!(gamma_t0);
        self
    }
}
