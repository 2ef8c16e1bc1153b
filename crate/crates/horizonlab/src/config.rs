//! JSON configuration: `{"data": {"name": ..., "params": {...}}, "chart": {...}}`.
//!
//! `chart` is optional and tagged by `kind`:
//!
//! ```json
//! {"kind": "radial", "r_min": 0.2, "r_max": 20.0, "n_points": 800, "spacing": "uniform"}
//! {"kind": "cell_centered", "r_max": 20.0, "n_points": 400}
//! {"kind": "periodic_box", "side": 1.0, "n_points": 64}
//! ```
//!
//! On the command line `--data` takes either a path to such a file or an
//! inline spec `name[:key=value,...]`, e.g. `pg:M=1` or `flat_vacuum`.

use std::collections::BTreeMap;
use std::path::Path;

use horizonlab_core::initial_data::{catalog_load, Chart, InitialDataSet, Spacing};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub data: DataConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chart: Option<ChartConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpacingConfig {
    #[default]
    Uniform,
    Logarithmic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChartConfig {
    Radial {
        r_min: f64,
        r_max: f64,
        n_points: usize,
        #[serde(default)]
        spacing: SpacingConfig,
    },
    CellCentered {
        r_max: f64,
        n_points: usize,
    },
    PeriodicBox {
        side: f64,
        n_points: usize,
    },
}

const ALIASES: [(&str, &str); 4] = [
    ("pg", "painleve_gullstrand"),
    ("schwarzschild", "isotropic_schwarzschild"),
    ("periodic", "periodic_constant_k"),
    ("perturbed", "conformal_perturbed"),
];

impl ChartConfig {
    pub fn to_chart(&self) -> Chart {
        match *self {
            ChartConfig::Radial {
                r_min,
                r_max,
                n_points,
                spacing,
            } => Chart::Radial {
                r_min,
                r_max,
                n_points,
                spacing: match spacing {
                    SpacingConfig::Uniform => Spacing::Uniform,
                    SpacingConfig::Logarithmic => Spacing::Logarithmic,
                },
            },
            ChartConfig::CellCentered { r_max, n_points } => Chart::cell_centered(r_max, n_points),
            ChartConfig::PeriodicBox { side, n_points } => Chart::PeriodicBox { side, n_points },
        }
    }

    /// Cell-centred charts come back as the equivalent radial chart.
    pub fn from_chart(chart: &Chart) -> CliResult<Self> {
        match *chart {
            Chart::Radial {
                r_min,
                r_max,
                n_points,
                spacing,
            } => Ok(ChartConfig::Radial {
                r_min,
                r_max,
                n_points,
                spacing: match spacing {
                    Spacing::Uniform => SpacingConfig::Uniform,
                    Spacing::Logarithmic => SpacingConfig::Logarithmic,
                },
            }),
            Chart::PeriodicBox { side, n_points } => Ok(ChartConfig::PeriodicBox { side, n_points }),
            Chart::ProductCylinder { .. } => Err(CliError::Config("chart: cylinder charts are not configurable".into())),
        }
    }

    fn with_points(&self, n: usize) -> Self {
        let mut c = self.clone();
        match &mut c {
            ChartConfig::Radial { n_points, .. }
            | ChartConfig::CellCentered { n_points, .. }
            | ChartConfig::PeriodicBox { n_points, .. } => *n_points = n,
        }
        c
    }
}

impl Config {
    pub fn parse_json(text: &str, origin: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("{origin}: {e}")))
    }

    /// Inline `name[:key=value,...]`.
    pub fn parse_inline(spec: &str) -> CliResult<Self> {
        let (name, rest) = spec.split_once(':').unwrap_or((spec, ""));
        let name = ALIASES.iter().find(|(a, _)| *a == name).map_or(name, |(_, full)| full);
        let mut params = BTreeMap::new();
        for kv in rest.split(',').filter(|t| !t.trim().is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("data.params: expected key=value, got `{kv}`")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| CliError::Config(format!("data.params.{}: not a number", k.trim())))?;
            params.insert(k.trim().to_string(), v);
        }
        Ok(Config {
            data: DataConfig {
                name: name.to_string(),
                params,
            },
            chart: None,
        })
    }

    /// File path if one exists, inline spec otherwise.
    pub fn from_arg(arg: &str) -> CliResult<Self> {
        let path = Path::new(arg);
        if path.is_file() {
            let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
            Self::parse_json(&text, arg)
        } else if arg.ends_with(".json") {
            Err(CliError::Config(format!("data: no such file `{arg}`")))
        } else {
            Self::parse_inline(arg)
        }
    }

    /// Loads the data set and pins the resolved chart into the config, so
    /// the returned config reproduces the data set exactly.
    pub fn resolve(&self, grid: Option<usize>) -> CliResult<(Config, InitialDataSet)> {
        let data = catalog_load(&self.data.name, &self.data.params).map_err(|e| match e {
            horizonlab_core::Error::UnknownDataSet(n) => CliError::Config(format!("data.name: unknown data set `{n}`")),
            horizonlab_core::Error::UnknownParameter(k) => CliError::Config(format!("data.params.{k}: unknown parameter")),
            horizonlab_core::Error::ParameterOutOfRange { name, value, reason } => {
                CliError::Config(format!("data.params.{name}: {value} {reason}"))
            }
            other => CliError::Core(other),
        })?;
        let mut chart = match &self.chart {
            Some(c) => c.clone(),
            None => ChartConfig::from_chart(&data.chart)?,
        };
        if let Some(n) = grid {
            chart = chart.with_points(n);
        }
        let data = data
            .with_chart(chart.to_chart())
            .map_err(|e| CliError::Config(format!("chart: {e}")))?;
        let pinned = Config {
            data: self.data.clone(),
            chart: Some(ChartConfig::from_chart(&data.chart)?),
        };
        Ok((pinned, data))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inline_and_json_agree() {
        let a = Config::parse_inline("pg:M=2").unwrap();
        let b = Config::parse_json(r#"{"data": {"name": "painleve_gullstrand", "params": {"M": 2}}}"#, "t").unwrap();
        assert_eq!(a, b);
        let (pinned, data) = a.resolve(Some(128)).unwrap();
        assert_eq!(data.chart.nodes().len(), 128);
        assert_eq!(pinned.resolve(None).unwrap().1, data);
    }

    #[test]
    fn errors_name_the_key() {
        let e = Config::parse_json(r#"{"data": {"name": "flat_vacuum", "parms": {}}}"#, "t").unwrap_err();
        assert!(e.to_string().contains("parms"), "{e}");
        let e = Config::parse_inline("flat_constant_k:d=1").unwrap().resolve(None).unwrap_err();
        assert!(e.to_string().contains("data.params.d"), "{e}");
        let e = Config::parse_inline("pg:M=-1").unwrap().resolve(None).unwrap_err();
        assert!(e.to_string().contains("data.params.M"), "{e}");
        assert_eq!(e.exit_code(), 2);
        let e = Config::parse_json(r#"{"data": {"name": "pg"}, "chart": {"kind": "radial", "r_min": 0.2}}"#, "t");
        assert!(e.unwrap_err().to_string().contains("r_max"));
    }
}
