//! Run configuration: a line-oriented `key = value` format with dotted
//! section prefixes, validated as a whole so every violation is reported
//! at once.

use std::collections::BTreeMap;
use std::fmt;

/// Initial-data families selectable from a run configuration.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    Zero,
    Gaussian {
        amplitude: f64,
        sigma: f64,
        modes: Vec<i64>,
        center: [f64; 2],
        velocity: [f64; 2],
    },
    RandomSmooth {
        amplitude: f64,
        sigma_k: f64,
        modes: Vec<i64>,
    },
}

impl InitialData {
    pub fn modes(&self) -> &[i64] {
        match self {
            InitialData::Zero => &[],
            InitialData::Gaussian { modes, .. } => modes,
            InitialData::RandomSmooth { modes, .. } => modes,
        }
    }
}

/// Fully validated run configuration with documented defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub grid_half_width: f64,
    pub grid_points: usize,
    pub band: u32,
    pub init: InitialData,
    pub dt: f64,
    pub t_end: f64,
    pub dealias: bool,
    pub snapshot_stride: usize,
    pub write_snapshots: bool,
    pub morawetz_enabled: bool,
    pub morawetz_lowpass: Option<i32>,
    pub scatter_gap_threshold: f64,
    pub scatter_tail_fraction: f64,
    pub seed: u64,
    pub output_dir: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            grid_half_width: 16.0,
            grid_points: 128,
            band: 1,
            init: InitialData::Gaussian {
                amplitude: 1.0,
                sigma: 1.0,
                modes: vec![0],
                center: [0.0, 0.0],
                velocity: [0.0, 0.0],
            },
            dt: 1e-3,
            t_end: 1.0,
            dealias: true,
            snapshot_stride: 100,
            write_snapshots: false,
            morawetz_enabled: true,
            morawetz_lowpass: None,
            scatter_gap_threshold: 1e-6,
            scatter_tail_fraction: 0.01,
            seed: 0,
            output_dir: "out".into(),
        }
    }
}

/// One configuration problem, with the line it came from when applicable.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigViolation {
    pub line: Option<usize>,
    pub key: String,
    pub message: String,
}

impl fmt::Display for ConfigViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}: {}", self.key, self.message),
            None => write!(f, "{}: {}", self.key, self.message),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConfigErrors {
    pub violations: Vec<ConfigViolation>,
}

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} configuration violation(s):", self.violations.len())?;
        for v in &self.violations {
            writeln!(f, "  {v}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

const KNOWN_KEYS: &[&str] = &[
    "grid.L",
    "grid.N",
    "band.J",
    "init.family",
    "init.amplitude",
    "init.sigma",
    "init.sigma_k",
    "init.modes",
    "init.center",
    "init.velocity",
    "stepper.dt",
    "stepper.T",
    "stepper.dealias",
    "stepper.snapshot_stride",
    "output.dir",
    "output.snapshots",
    "diag.morawetz",
    "diag.lowpass",
    "diag.scatter_gap_threshold",
    "diag.scatter_tail_fraction",
    "seed",
];

struct RawEntry {
    line: usize,
    value: String,
}

/// Parses and validates a configuration text. On failure every violation
/// is returned, each tagged with its source line where one exists.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigErrors> {
    let mut violations = Vec::new();
    let mut entries: BTreeMap<String, RawEntry> = BTreeMap::new();

    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let Some(eq) = line.find('=') else {
            violations.push(ConfigViolation {
                line: Some(line_no),
                key: line.to_string(),
                message: "expected `key = value`".into(),
            });
            continue;
        };
        let key = line[..eq].trim().to_string();
        let value = line[eq + 1..].trim().to_string();
        if !KNOWN_KEYS.contains(&key.as_str()) {
            violations.push(ConfigViolation {
                line: Some(line_no),
                key,
                message: "unknown key".into(),
            });
            continue;
        }
        if let Some(prev) = entries.get(&key) {
            violations.push(ConfigViolation {
                line: Some(line_no),
                key: key.clone(),
                message: format!("duplicate key (first set on line {})", prev.line),
            });
            continue;
        }
        entries.insert(key, RawEntry { line: line_no, value });
    }

    let mut cfg = RunConfig::default();
    let mut lines: BTreeMap<&str, usize> = BTreeMap::new();
    for (key, entry) in &entries {
        lines.insert(key.as_str(), entry.line);
    }

    macro_rules! take {
        ($key:expr, $parse:expr, $slot:expr) => {
            if let Some(entry) = entries.get($key) {
                match $parse(&entry.value) {
                    Ok(v) => $slot = v,
                    Err(msg) => violations.push(ConfigViolation {
                        line: Some(entry.line),
                        key: $key.to_string(),
                        message: msg,
                    }),
                }
            }
        };
    }

    take!("grid.L", parse_f64, cfg.grid_half_width);
    take!("grid.N", parse_usize, cfg.grid_points);
    take!("band.J", parse_u32, cfg.band);
    take!("stepper.dt", parse_f64, cfg.dt);
    take!("stepper.T", parse_f64, cfg.t_end);
    take!("stepper.dealias", parse_bool, cfg.dealias);
    take!("stepper.snapshot_stride", parse_usize, cfg.snapshot_stride);
    take!("output.snapshots", parse_bool, cfg.write_snapshots);
    take!("diag.morawetz", parse_bool, cfg.morawetz_enabled);
    take!("diag.lowpass", parse_lowpass, cfg.morawetz_lowpass);
    take!(
        "diag.scatter_gap_threshold",
        parse_f64,
        cfg.scatter_gap_threshold
    );
    take!(
        "diag.scatter_tail_fraction",
        parse_f64,
        cfg.scatter_tail_fraction
    );
    take!("seed", parse_u64, cfg.seed);
    take!("output.dir", parse_string, cfg.output_dir);

    // Initial-data family, assembled from its parameter keys.
    let family = entries
        .get("init.family")
        .map(|e| e.value.as_str())
        .unwrap_or("gaussian");
    let mut amplitude = 1.0;
    let mut sigma = 1.0;
    let mut sigma_k = 1.5;
    let mut modes = vec![0i64];
    let mut center = [0.0, 0.0];
    let mut velocity = [0.0, 0.0];
    take!("init.amplitude", parse_f64, amplitude);
    take!("init.sigma", parse_f64, sigma);
    take!("init.sigma_k", parse_f64, sigma_k);
    take!("init.modes", parse_modes, modes);
    take!("init.center", parse_vec2, center);
    take!("init.velocity", parse_vec2, velocity);
    match family {
        "zero" => cfg.init = InitialData::Zero,
        "gaussian" => {
            cfg.init = InitialData::Gaussian {
                amplitude,
                sigma,
                modes,
                center,
                velocity,
            }
        }
        "random_smooth" => {
            cfg.init = InitialData::RandomSmooth {
                amplitude,
                sigma_k,
                modes,
            }
        }
        other => violations.push(ConfigViolation {
            line: lines.get("init.family").copied(),
            key: "init.family".into(),
            message: format!(
                "unknown family `{other}` (expected zero, gaussian, or random_smooth)"
            ),
        }),
    }

    validate(&cfg, &lines, &mut violations);

    if violations.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigErrors { violations })
    }
}

fn validate(
    cfg: &RunConfig,
    lines: &BTreeMap<&str, usize>,
    violations: &mut Vec<ConfigViolation>,
) {
    let at = |key: &str| lines.get(key).copied();

    if !cfg.grid_points.is_power_of_two() || cfg.grid_points < 8 {
        violations.push(ConfigViolation {
            line: at("grid.N"),
            key: "grid.N".into(),
            message: format!(
                "N must be a power of two >= 8, got {}",
                cfg.grid_points
            ),
        });
    }
    if !(cfg.grid_half_width > 0.0 && cfg.grid_half_width.is_finite()) {
        violations.push(ConfigViolation {
            line: at("grid.L"),
            key: "grid.L".into(),
            message: format!("L must be positive and finite, got {}", cfg.grid_half_width),
        });
    }
    if !(cfg.dt > 0.0 && cfg.dt.is_finite()) {
        violations.push(ConfigViolation {
            line: at("stepper.dt"),
            key: "stepper.dt".into(),
            message: format!("dt must be positive, got {}", cfg.dt),
        });
    } else if cfg.t_end < cfg.dt {
        violations.push(ConfigViolation {
            line: at("stepper.T"),
            key: "stepper.T".into(),
            message: format!(
                "horizon T = {} must cover at least one step dt = {}",
                cfg.t_end, cfg.dt
            ),
        });
    }
    if cfg.snapshot_stride == 0 {
        violations.push(ConfigViolation {
            line: at("stepper.snapshot_stride"),
            key: "stepper.snapshot_stride".into(),
            message: "snapshot_stride must be >= 1".into(),
        });
    }
    if !(cfg.scatter_tail_fraction > 0.0 && cfg.scatter_tail_fraction < 1.0) {
        violations.push(ConfigViolation {
            line: at("diag.scatter_tail_fraction"),
            key: "diag.scatter_tail_fraction".into(),
            message: "tail fraction must lie in (0, 1)".into(),
        });
    }

    // Cross-field: every referenced mode must sit inside the band.
    for &j in cfg.init.modes() {
        if j.unsigned_abs() > cfg.band as u64 {
            violations.push(ConfigViolation {
                line: at("init.modes"),
                key: "init.modes".into(),
                message: format!(
                    "mode {j} lies outside band.J = {} (init.modes vs band.J)",
                    cfg.band
                ),
            });
        }
    }

    // Resolution heuristic for localized data: the box must contain the
    // initial spread plus the distance the fastest retained wave travels,
    // L >= x_spread(0) + 2 k_spread T.
    if let InitialData::Gaussian {
        sigma,
        center,
        velocity,
        amplitude,
        ..
    } = &cfg.init
    {
        if *amplitude > 0.0 && *sigma > 0.0 {
            let x_spread = center[0].hypot(center[1]) + 4.0 * sigma;
            let k_spread = velocity[0].hypot(velocity[1]) + 4.0 / sigma;
            let needed = x_spread + 2.0 * k_spread * cfg.t_end;
            if cfg.grid_half_width < needed {
                violations.push(ConfigViolation {
                    line: at("grid.L"),
                    key: "grid.L".into(),
                    message: format!(
                        "box too small for the run horizon: need L >= {needed:.2} \
                         (= x_spread {x_spread:.2} + 2 * k_spread {k_spread:.2} * T {})",
                        cfg.t_end
                    ),
                });
            }
        }
        if *sigma <= 0.0 {
            violations.push(ConfigViolation {
                line: at("init.sigma"),
                key: "init.sigma".into(),
                message: format!("sigma must be positive, got {sigma}"),
            });
        }
    }
    if let InitialData::RandomSmooth { sigma_k, .. } = &cfg.init {
        if *sigma_k <= 0.0 {
            violations.push(ConfigViolation {
                line: at("init.sigma_k"),
                key: "init.sigma_k".into(),
                message: format!("sigma_k must be positive, got {sigma_k}"),
            });
        }
    }
}

fn parse_f64(s: &str) -> Result<f64, String> {
    s.parse::<f64>().map_err(|_| format!("expected a number, got `{s}`"))
}

fn parse_u64(s: &str) -> Result<u64, String> {
    s.parse::<u64>()
        .map_err(|_| format!("expected an unsigned integer, got `{s}`"))
}

fn parse_u32(s: &str) -> Result<u32, String> {
    s.parse::<u32>()
        .map_err(|_| format!("expected an unsigned integer, got `{s}`"))
}

fn parse_usize(s: &str) -> Result<usize, String> {
    s.parse::<usize>()
        .map_err(|_| format!("expected an unsigned integer, got `{s}`"))
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s {
        "true" | "on" | "yes" => Ok(true),
        "false" | "off" | "no" => Ok(false),
        _ => Err(format!("expected true/false, got `{s}`")),
    }
}

fn parse_string(s: &str) -> Result<String, String> {
    Ok(s.to_string())
}

fn parse_modes(s: &str) -> Result<Vec<i64>, String> {
    let mut out = Vec::new();
    for part in s.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        out.push(
            part.parse::<i64>()
                .map_err(|_| format!("expected comma-separated integers, got `{part}`"))?,
        );
    }
    if out.is_empty() {
        return Err("expected at least one mode index".into());
    }
    Ok(out)
}

fn parse_vec2(s: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(format!("expected two comma-separated numbers, got `{s}`"));
    }
    Ok([parse_f64(parts[0])?, parse_f64(parts[1])?])
}

fn parse_lowpass(s: &str) -> Result<Option<i32>, String> {
    if s == "none" {
        return Ok(None);
    }
    s.parse::<i32>()
        .map(Some)
        .map_err(|_| format!("expected `none` or an integer level, got `{s}`"))
}

/// Canonical echo of a resolved configuration: one sorted `key = value`
/// line per field, suitable for manifests and determinism checks.
pub fn canonical_lines(cfg: &RunConfig) -> Vec<String> {
    let mut lines = vec![
        format!("band.J = {}", cfg.band),
        format!("diag.lowpass = {}", match cfg.morawetz_lowpass {
            None => "none".to_string(),
            Some(v) => v.to_string(),
        }),
        format!("diag.morawetz = {}", cfg.morawetz_enabled),
        format!("diag.scatter_gap_threshold = {}", cfg.scatter_gap_threshold),
        format!("diag.scatter_tail_fraction = {}", cfg.scatter_tail_fraction),
        format!("grid.L = {}", cfg.grid_half_width),
        format!("grid.N = {}", cfg.grid_points),
    ];
    match &cfg.init {
        InitialData::Zero => lines.push("init.family = zero".into()),
        InitialData::Gaussian {
            amplitude,
            sigma,
            modes,
            center,
            velocity,
        } => {
            lines.push(format!("init.amplitude = {amplitude}"));
            lines.push(format!("init.center = {},{}", center[0], center[1]));
            lines.push("init.family = gaussian".into());
            lines.push(format!(
                "init.modes = {}",
                modes
                    .iter()
                    .map(|m| m.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            ));
            lines.push(format!("init.sigma = {sigma}"));
            lines.push(format!("init.velocity = {},{}", velocity[0], velocity[1]));
        }
        InitialData::RandomSmooth {
            amplitude,
            sigma_k,
            modes,
        } => {
            lines.push(format!("init.amplitude = {amplitude}"));
            lines.push("init.family = random_smooth".into());
            lines.push(format!(
                "init.modes = {}",
                modes
                    .iter()
                    .map(|m| m.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            ));
            lines.push(format!("init.sigma_k = {sigma_k}"));
        }
    }
    lines.push(format!("output.dir = {}", cfg.output_dir));
    lines.push(format!("output.snapshots = {}", cfg.write_snapshots));
    lines.push(format!("seed = {}", cfg.seed));
    lines.push(format!("stepper.T = {}", cfg.t_end));
    lines.push(format!("stepper.dealias = {}", cfg.dealias));
    lines.push(format!("stepper.dt = {}", cfg.dt));
    lines.push(format!("stepper.snapshot_stride = {}", cfg.snapshot_stride));
    lines.sort();
    lines
}
