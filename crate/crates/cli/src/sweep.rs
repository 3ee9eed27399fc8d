use rayon::prelude::*;

use crate::config::ScenarioConfig;
use crate::error::CliError;
use crate::scenario::{run_config, table_csv, Summary};

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub name: String,
    pub values: Vec<f64>,
}

impl std::str::FromStr for Axis {
    type Err = CliError;

    /// `name=v1,v2,...`
    fn from_str(s: &str) -> Result<Self, CliError> {
        let (name, list) = s
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("axis {s:?} must look like name=v1,v2")))?;
        let name = name.trim();
        if name.is_empty() {
            return Err(CliError::Usage(format!("axis {s:?} has no name")));
        }
        let values = list
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|e| CliError::Usage(format!("axis {name}: bad value {v:?}: {e}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Axis {
            name: name.to_string(),
            values,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub point: Vec<f64>,
    pub outcome: Result<Summary, CliError>,
}

impl SweepRow {
    pub fn error_code(&self) -> i32 {
        self.outcome.as_ref().err().map_or(0, CliError::exit_code)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub axes: Vec<String>,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    /// Axis values, `error_code`, then the summary statistics. Failed points leave them `NaN`.
    pub fn to_csv(&self) -> String {
        let mut columns = self.axes.clone();
        columns.extend(["error_code", "max_E", "t_max_E", "E_final", "duration"].map(String::from));
        let rows: Vec<Vec<f64>> = self
            .rows
            .iter()
            .map(|row| {
                let mut v = row.point.clone();
                v.push(row.error_code() as f64);
                let stats = match &row.outcome {
                    Ok(s) => [s.max_e, s.t_max_e, s.e_final, s.duration],
                    Err(_) => [None; 4],
                };
                v.extend(stats.map(|x| x.unwrap_or(f64::NAN)));
                v
            })
            .collect();
        table_csv(&columns, &rows)
    }

    /// First nonzero point error, if any.
    pub fn exit_code(&self) -> i32 {
        self.rows
            .iter()
            .map(SweepRow::error_code)
            .find(|&c| c != 0)
            .unwrap_or(0)
    }
}

/// Cartesian product of the axes; the first axis varies slowest.
pub fn grid_points(axes: &[Axis]) -> Vec<Vec<f64>> {
    axes.iter().fold(vec![Vec::new()], |acc, axis| {
        acc.iter()
            .flat_map(|prefix| {
                axis.values.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect()
    })
}

pub fn sweep(
    template: &ScenarioConfig,
    axes: &[Axis],
    workers: usize,
) -> Result<SweepResult, CliError> {
    if axes.is_empty() || axes.iter().any(|a| a.values.is_empty()) {
        return Err(CliError::Usage(
            "at least one nonempty --axis is required".into(),
        ));
    }
    if workers == 0 {
        return Err(CliError::Usage("--workers must be at least 1".into()));
    }
    for (i, a) in axes.iter().enumerate() {
        if axes[..i].iter().any(|b| b.name == a.name) {
            return Err(CliError::Usage(format!("axis {} given twice", a.name)));
        }
    }
    let points = grid_points(axes);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Io(format!("cannot start worker pool: {e}")))?;
    let rows = pool.install(|| {
        points
            .par_iter()
            .map(|point| {
                let mut config = template.clone();
                config.output = None;
                for (axis, &v) in axes.iter().zip(point) {
                    config.params.insert(axis.name.clone(), v);
                }
                SweepRow {
                    point: point.clone(),
                    outcome: run_config(&config).map(|out| out.summary),
                }
            })
            .collect()
    });
    Ok(SweepResult {
        axes: axes.iter().map(|a| a.name.clone()).collect(),
        rows,
    })
}
