//! Flat key-value configuration with `[sections]`.
//!
//! ```text
//!   # comments start with '#'
//!   [domain]
//!   lx = 1.0
//!   ly = 1.0
//!   h = 0.005
//!
//!   [walls]                      # neumann | contact:<alpha_rad>
//!   left = neumann
//!   right = neumann
//!   bottom = contact:1.0471975511965976
//!   top = neumann
//!
//!   [solver]
//!   eps = 0.02
//!   t_end = 0.02
//!   tau = 1e-4                   # default eps^2/4
//!   scheme = convex_splitting    # | stabilized
//!   stabilization = 2.0          # S for the stabilized scheme
//!   snapshot_stride = 8          # default keeps <= 200 snapshots
//!   cg_tol = 1e-10
//!   cg_max_iters = 50000
//!
//!   [initial]
//!   kind = half_disk             # chord | half_disk | translator_graph | expression
//!   radius = 0.3                 # half_disk
//!   center_x = 0.5               # half_disk
//!   position = 0.5               # chord: interface at x = position, A = {x < position}
//!   y0 = 0.25                    # translator_graph: initial center height
//!   levelset = "..."             # expression: A = {expr > 0}
//!   perturb_amplitude = 0.0      # bump added to the interface position
//!
//!   [reference]
//!   kind = none                  # stationary_chord | shrinking_half_disk | strip_translator
//!
//!   [sweep]
//!   eps_list = 0.04,0.02,0.01    # sweep members; h = eps/4, tau = eps^2/4
//!
//!   [output]
//!   dir = out/run
//! ```

use anyhow::{anyhow, bail, Context, Result};
use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub enum WallSpecCfg {
    Neumann,
    Contact(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialKind {
    Chord,
    HalfDisk,
    TranslatorGraph,
    Expression,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceKind {
    None,
    StationaryChord,
    ShrinkingHalfDisk,
    StripTranslator,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub lx: f64,
    pub ly: f64,
    pub h: f64,
    pub walls: [WallSpecCfg; 4], // left, right, bottom, top
    pub eps: f64,
    pub tau: Option<f64>,
    pub scheme: String,
    pub stabilization: f64,
    pub t_end: f64,
    pub snapshot_stride: Option<usize>,
    pub cg_tol: f64,
    pub cg_max_iters: usize,
    pub initial: InitialKind,
    pub radius: f64,
    pub center_x: f64,
    pub position: f64,
    pub y0: f64,
    pub levelset: Option<String>,
    pub perturb_amplitude: f64,
    pub reference: ReferenceKind,
    pub eps_list: Vec<f64>,
    pub out_dir: String,
}

type Sections = BTreeMap<String, BTreeMap<String, String>>;

fn parse_sections(text: &str) -> Result<Sections> {
    let mut out: Sections = BTreeMap::new();
    let mut current = String::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') {
            if !line.ends_with(']') {
                bail!("line {}: malformed section header '{line}'", lineno + 1);
            }
            current = line[1..line.len() - 1].trim().to_string();
            out.entry(current.clone()).or_default();
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("line {}: expected 'key = value', got '{line}'", lineno + 1))?;
        if current.is_empty() {
            bail!("line {}: key outside a [section]", lineno + 1);
        }
        let value = value.trim().trim_matches('"').to_string();
        out.get_mut(&current)
            .unwrap()
            .insert(key.trim().to_string(), value);
    }
    Ok(out)
}

fn get<'a>(s: &'a Sections, sec: &str, key: &str) -> Option<&'a str> {
    s.get(sec).and_then(|m| m.get(key)).map(|v| v.as_str())
}

fn req_f64(s: &Sections, sec: &str, key: &str) -> Result<f64> {
    get(s, sec, key)
        .ok_or_else(|| anyhow!("missing [{sec}] {key}"))?
        .parse()
        .with_context(|| format!("[{sec}] {key} is not a number"))
}

fn opt_f64(s: &Sections, sec: &str, key: &str, default: f64) -> Result<f64> {
    match get(s, sec, key) {
        None => Ok(default),
        Some(v) => v
            .parse()
            .with_context(|| format!("[{sec}] {key} is not a number")),
    }
}

fn parse_wall(v: &str) -> Result<WallSpecCfg> {
    if v == "neumann" {
        return Ok(WallSpecCfg::Neumann);
    }
    if let Some(a) = v.strip_prefix("contact:") {
        let alpha: f64 = a
            .trim()
            .parse()
            .with_context(|| format!("bad contact angle '{a}'"))?;
        if !(alpha > 0.0 && alpha < std::f64::consts::PI) {
            bail!("contact angle must lie in (0, pi), got {alpha}");
        }
        return Ok(WallSpecCfg::Contact(alpha));
    }
    bail!("wall condition must be 'neumann' or 'contact:<alpha_rad>', got '{v}'")
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let s = parse_sections(text)?;
        let lx = req_f64(&s, "domain", "lx")?;
        let ly = req_f64(&s, "domain", "ly")?;
        let h = req_f64(&s, "domain", "h")?;
        let mut walls = [
            WallSpecCfg::Neumann,
            WallSpecCfg::Neumann,
            WallSpecCfg::Neumann,
            WallSpecCfg::Neumann,
        ];
        for (i, name) in ["left", "right", "bottom", "top"].iter().enumerate() {
            if let Some(v) = get(&s, "walls", name) {
                walls[i] = parse_wall(v)?;
            }
        }
        let eps = req_f64(&s, "solver", "eps")?;
        let t_end = req_f64(&s, "solver", "t_end")?;
        let tau = match get(&s, "solver", "tau") {
            None => None,
            Some(v) => Some(v.parse().context("[solver] tau is not a number")?),
        };
        let scheme = get(&s, "solver", "scheme")
            .unwrap_or("convex_splitting")
            .to_string();
        if scheme != "convex_splitting" && scheme != "stabilized" {
            bail!("[solver] scheme must be convex_splitting or stabilized, got '{scheme}'");
        }
        let stabilization = opt_f64(&s, "solver", "stabilization", 2.0)?;
        let snapshot_stride = match get(&s, "solver", "snapshot_stride") {
            None => None,
            Some(v) => Some(
                v.parse::<usize>()
                    .context("[solver] snapshot_stride is not an integer")?,
            ),
        };
        let cg_tol = opt_f64(&s, "solver", "cg_tol", 1e-10)?;
        let cg_max_iters = match get(&s, "solver", "cg_max_iters") {
            None => 50_000,
            Some(v) => v
                .parse()
                .context("[solver] cg_max_iters is not an integer")?,
        };
        let initial = match get(&s, "initial", "kind").unwrap_or("chord") {
            "chord" => InitialKind::Chord,
            "half_disk" => InitialKind::HalfDisk,
            "translator_graph" => InitialKind::TranslatorGraph,
            "expression" => InitialKind::Expression,
            other => bail!("unknown initial kind '{other}'"),
        };
        let radius = opt_f64(&s, "initial", "radius", 0.3)?;
        let center_x = opt_f64(&s, "initial", "center_x", 0.5 * lx)?;
        let position = opt_f64(&s, "initial", "position", 0.5 * lx)?;
        let y0 = opt_f64(&s, "initial", "y0", 0.25 * ly)?;
        let levelset = get(&s, "initial", "levelset").map(|v| v.to_string());
        let perturb_amplitude = opt_f64(&s, "initial", "perturb_amplitude", 0.0)?;
        let reference = match get(&s, "reference", "kind").unwrap_or("none") {
            "none" => ReferenceKind::None,
            "stationary_chord" => ReferenceKind::StationaryChord,
            "shrinking_half_disk" => ReferenceKind::ShrinkingHalfDisk,
            "strip_translator" => ReferenceKind::StripTranslator,
            other => bail!("unknown reference kind '{other}'"),
        };
        let eps_list = match get(&s, "sweep", "eps_list") {
            None => Vec::new(),
            Some(v) => v
                .split(',')
                .map(|p| p.trim().parse::<f64>().context("bad eps_list entry"))
                .collect::<Result<Vec<f64>>>()?,
        };
        let out_dir = get(&s, "output", "dir").unwrap_or("out").to_string();

        let cfg = ExperimentConfig {
            lx,
            ly,
            h,
            walls,
            eps,
            tau,
            scheme,
            stabilization,
            t_end,
            snapshot_stride,
            cg_tol,
            cg_max_iters,
            initial,
            radius,
            center_x,
            position,
            y0,
            levelset,
            perturb_amplitude,
            reference,
            eps_list,
            out_dir,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.eps < 4.0 * self.h {
            bail!(
                "eps = {} must be at least 4h = {} to resolve the profile",
                self.eps,
                4.0 * self.h
            );
        }
        if self.initial == InitialKind::Expression && self.levelset.is_none() {
            bail!("initial kind 'expression' requires [initial] levelset");
        }
        // The internal boundary energy needs all contact angles on one side
        // of pi/2 (the phase swap is global).
        let mut acute = false;
        let mut obtuse = false;
        for w in &self.walls {
            if let WallSpecCfg::Contact(a) = w {
                if *a < FRAC_PI_2 - 1e-12 {
                    acute = true;
                }
                if *a > FRAC_PI_2 + 1e-12 {
                    obtuse = true;
                }
            }
        }
        if acute && obtuse {
            bail!("mixed acute and obtuse contact angles are not representable (the phase swap is global)");
        }
        if self.initial == InitialKind::TranslatorGraph {
            let lr_contact = matches!(self.walls[0], WallSpecCfg::Contact(_))
                && matches!(self.walls[1], WallSpecCfg::Contact(_));
            if !lr_contact {
                bail!("translator_graph requires contact walls on left and right");
            }
            if let (WallSpecCfg::Contact(a), WallSpecCfg::Contact(b)) =
                (&self.walls[0], &self.walls[1])
            {
                if (a - b).abs() > 1e-12 {
                    bail!("translator_graph requires equal left/right contact angles");
                }
            }
        }
        if self.reference == ReferenceKind::StripTranslator
            && self.initial != InitialKind::TranslatorGraph
        {
            bail!("strip_translator reference requires translator_graph initial data");
        }
        Ok(())
    }

    /// True when the configured contact angles are obtuse and the run is
    /// internally phase-swapped.
    pub fn swapped(&self) -> bool {
        self.walls.iter().any(|w| match w {
            WallSpecCfg::Contact(a) => *a > FRAC_PI_2 + 1e-12,
            WallSpecCfg::Neumann => false,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
[domain]
lx = 1.0
ly = 1.0
h = 0.005

[walls]
bottom = contact:1.0471975511965976

[solver]
eps = 0.02
t_end = 0.02

[initial]
kind = half_disk
radius = 0.3

[output]
dir = out/test
"#;

    #[test]
    fn parses_base_config() {
        let c = ExperimentConfig::parse(BASE).unwrap();
        assert_eq!(c.h, 0.005);
        assert_eq!(c.initial, InitialKind::HalfDisk);
        assert!(matches!(c.walls[2], WallSpecCfg::Contact(_)));
        assert!(matches!(c.walls[0], WallSpecCfg::Neumann));
        assert!(!c.swapped());
    }

    #[test]
    fn rejects_bad_configs() {
        // eps below 4h
        let bad = BASE.replace("eps = 0.02", "eps = 0.01");
        assert!(ExperimentConfig::parse(&bad).is_err());
        // malformed wall
        let bad = BASE.replace("contact:1.0471975511965976", "contact:banana");
        assert!(ExperimentConfig::parse(&bad).is_err());
        // mixed acute/obtuse
        let bad = BASE.replace(
            "bottom = contact:1.0471975511965976",
            "bottom = contact:1.0\ntop = contact:2.5",
        );
        assert!(ExperimentConfig::parse(&bad).is_err());
        // translator without side contact walls
        let bad = BASE.replace("kind = half_disk", "kind = translator_graph");
        assert!(ExperimentConfig::parse(&bad).is_err());
    }

    #[test]
    fn swap_detection() {
        let c = ExperimentConfig::parse(&BASE.replace(
            "contact:1.0471975511965976",
            "contact:2.0943951023931953",
        ))
        .unwrap();
        assert!(c.swapped());
    }
}
