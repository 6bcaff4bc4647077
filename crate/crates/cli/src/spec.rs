//! Experiment specification: a flat `key = value` text format, parsed with
//! full validation up front — every error in the file is reported, not just
//! the first.

use dsflow_core::grid::GridKind;
use dsflow_core::initial::Mode;

/// A fully validated experiment description.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub n: usize,
    pub k: usize,
    pub kind: GridKind,
    pub n_theta: usize,
    pub n_phi: usize,
    pub rho0: f64,
    pub modes: Vec<Mode>,
    /// (count, max_degree, amplitude) for seeded random modes.
    pub random_modes: Option<(usize, usize, f64)>,
    pub seed: u64,
    pub t_end: f64,
    pub cfl: f64,
    pub upsilon_min: f64,
    pub umbilicity_tol: f64,
    pub monitor_slack: f64,
    pub dt_min: f64,
    pub snapshot_interval: f64,
    /// Keep every N-th step in the monitor series / run CSV.
    pub csv_interval: usize,
    pub out_dir: Option<String>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            n: 2,
            k: 2,
            kind: GridKind::Axisymmetric,
            n_theta: 256,
            n_phi: 16,
            rho0: 1.0,
            modes: Vec::new(),
            random_modes: None,
            seed: 0,
            t_end: 5.0,
            cfl: 0.2,
            upsilon_min: 1e-3,
            umbilicity_tol: 1e-8,
            monitor_slack: 1e-8,
            dt_min: 1e-12,
            snapshot_interval: 0.0,
            csv_interval: 1,
            out_dir: None,
        }
    }
}

impl ExperimentSpec {
    pub fn resolution(&self) -> Vec<usize> {
        match self.kind {
            GridKind::Axisymmetric => vec![self.n_theta],
            GridKind::LatLong => vec![self.n_theta, self.n_phi],
        }
    }
}

/// Parse a spec file. Collects every problem; the spec is only returned when
/// no errors were found.
pub fn parse_spec(text: &str) -> Result<ExperimentSpec, Vec<String>> {
    let mut spec = ExperimentSpec::default();
    let mut errors = Vec::new();
    let mut k_set = false;

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            errors.push(format!(
                "line {}: expected `key = value`, got `{line}`",
                lineno + 1
            ));
            continue;
        };
        let (key, value) = (key.trim(), value.trim());
        let mut err = |msg: String| errors.push(format!("line {}: {msg}", lineno + 1));
        macro_rules! parse {
            ($ty:ty) => {
                match value.parse::<$ty>() {
                    Ok(v) => Some(v),
                    Err(_) => {
                        err(format!("cannot parse `{value}` for key `{key}`"));
                        None
                    }
                }
            };
        }
        match key {
            "n" => {
                if let Some(v) = parse!(usize) {
                    spec.n = v;
                }
            }
            "k" => {
                if let Some(v) = parse!(usize) {
                    spec.k = v;
                    k_set = true;
                }
            }
            "grid" => match value {
                "axisymmetric" => spec.kind = GridKind::Axisymmetric,
                "latlong" => spec.kind = GridKind::LatLong,
                other => err(format!("unknown grid kind `{other}`")),
            },
            "n_theta" => {
                if let Some(v) = parse!(usize) {
                    spec.n_theta = v;
                }
            }
            "n_phi" => {
                if let Some(v) = parse!(usize) {
                    spec.n_phi = v;
                }
            }
            "rho0" => {
                if let Some(v) = parse!(f64) {
                    spec.rho0 = v;
                }
            }
            "mode" => {
                let parts: Vec<&str> = value.split_whitespace().collect();
                if parts.len() != 3 {
                    err(format!(
                        "mode takes `degree order amplitude`, got `{value}`"
                    ));
                } else {
                    match (
                        parts[0].parse::<usize>(),
                        parts[1].parse::<i32>(),
                        parts[2].parse::<f64>(),
                    ) {
                        (Ok(degree), Ok(order), Ok(amplitude)) => spec.modes.push(Mode {
                            degree,
                            order,
                            amplitude,
                        }),
                        _ => err(format!("cannot parse mode `{value}`")),
                    }
                }
            }
            "random_modes" => {
                let parts: Vec<&str> = value.split_whitespace().collect();
                if parts.len() != 3 {
                    err(format!(
                        "random_modes takes `count max_degree amplitude`, got `{value}`"
                    ));
                } else {
                    match (
                        parts[0].parse::<usize>(),
                        parts[1].parse::<usize>(),
                        parts[2].parse::<f64>(),
                    ) {
                        (Ok(c), Ok(d), Ok(a)) => spec.random_modes = Some((c, d, a)),
                        _ => err(format!("cannot parse random_modes `{value}`")),
                    }
                }
            }
            "seed" => {
                if let Some(v) = parse!(u64) {
                    spec.seed = v;
                }
            }
            "t_end" => {
                if let Some(v) = parse!(f64) {
                    spec.t_end = v;
                }
            }
            "cfl" => {
                if let Some(v) = parse!(f64) {
                    spec.cfl = v;
                }
            }
            "upsilon_min" => {
                if let Some(v) = parse!(f64) {
                    spec.upsilon_min = v;
                }
            }
            "umbilicity_tol" => {
                if let Some(v) = parse!(f64) {
                    spec.umbilicity_tol = v;
                }
            }
            "monitor_slack" => {
                if let Some(v) = parse!(f64) {
                    spec.monitor_slack = v;
                }
            }
            "dt_min" => {
                if let Some(v) = parse!(f64) {
                    spec.dt_min = v;
                }
            }
            "snapshot_interval" => {
                if let Some(v) = parse!(f64) {
                    spec.snapshot_interval = v;
                }
            }
            "csv_interval" => {
                if let Some(v) = parse!(usize) {
                    spec.csv_interval = v.max(1);
                }
            }
            "out_dir" => spec.out_dir = Some(value.to_string()),
            other => err(format!("unknown key `{other}`")),
        }
    }

    // cross-field validation; keep collecting rather than stopping early
    if !(2..=8).contains(&spec.n) {
        errors.push(format!("n = {} outside 2..=8", spec.n));
    }
    if spec.k < 1 || spec.k > spec.n.max(2) {
        errors.push(format!("k = {} requires 1 <= k <= n = {}", spec.k, spec.n));
    }
    let _ = k_set;
    if spec.kind == GridKind::LatLong && spec.n != 2 {
        errors.push(format!("latlong grid requires n = 2, got n = {}", spec.n));
    }
    if spec.n_theta < 16 {
        errors.push(format!(
            "n_theta = {} below the minimum of 16",
            spec.n_theta
        ));
    }
    if spec.kind == GridKind::LatLong && (spec.n_phi < 16 || spec.n_phi % 2 != 0) {
        errors.push(format!(
            "n_phi = {} must be even and at least 16 for latlong grids",
            spec.n_phi
        ));
    }
    if !(spec.rho0 > 0.0) {
        errors.push(format!("rho0 = {} must be positive", spec.rho0));
    }
    if !(spec.cfl > 0.0 && spec.cfl < 1.0) {
        errors.push(format!("cfl = {} outside (0, 1)", spec.cfl));
    }
    if spec.t_end < 0.0 {
        errors.push(format!("t_end = {} must be nonnegative", spec.t_end));
    }
    for m in &spec.modes {
        if m.degree == 0 || m.degree > dsflow_core::initial::MAX_DEGREE {
            errors.push(format!("mode degree {} outside 1..=12", m.degree));
        }
        if m.order.unsigned_abs() as usize > m.degree {
            errors.push(format!(
                "mode order {} exceeds degree {}",
                m.order, m.degree
            ));
        }
        if spec.kind == GridKind::Axisymmetric && m.order != 0 {
            errors.push(format!(
                "axisymmetric grid cannot carry azimuthal order {}",
                m.order
            ));
        }
    }

    if errors.is_empty() {
        Ok(spec)
    } else {
        Err(errors)
    }
}
