use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::assist::{AssistParams, Mode};
use crate::geom::Vec3;
use crate::sim::{hairpin, overhand_knot_projection, resample_polyline, straight, RopeKind, SimConfig};

use super::HarnessError;

fn d_spacing() -> f64 {
    0.02
}

fn d_perception_period() -> u64 {
    10
}

/// Initial rope arrangement on the table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Layout {
    Straight {
        length: f64,
        /// Heading of the rope in the table plane (radians).
        #[serde(default)]
        heading: f64,
    },
    Hairpin {
        leg: f64,
        gap: f64,
    },
    OverhandKnotProjection {
        scale: f64,
        tail: f64,
    },
    /// Explicit polyline in table coordinates; z is replaced by the resting
    /// height.
    Points {
        points: Vec<[f64; 2]>,
    },
}

impl Layout {
    /// Particle positions resting on the table, plus the default goal index.
    pub fn particles(&self, spacing: f64, rest_z: f64) -> Result<(Vec<Vec3<f64>>, usize), HarnessError> {
        let origin = Vec3::new(0.0, 0.0, rest_z);
        let (pts, goal_hint) = match *self {
            Layout::Straight { length, heading } => {
                let dir = Vec3::new(heading.cos(), heading.sin(), 0.0);
                let n = (length / spacing).floor() as usize + 1;
                let pts = straight(n, spacing, origin - dir * (spacing * (n - 1) as f64 / 2.0), dir);
                (pts, origin)
            }
            Layout::Hairpin { leg, gap } => (hairpin(leg, gap, origin, spacing), origin + Vec3::new(leg / 2.0, gap, 0.0)),
            Layout::OverhandKnotProjection { scale, tail } => {
                let pts = overhand_knot_projection(scale, tail, origin, spacing);
                let mid = pts.get(pts.len() / 2).copied().unwrap_or(origin);
                (pts, mid)
            }
            Layout::Points { ref points } => {
                let poly: Vec<Vec3<f64>> = points.iter().map(|p| Vec3::new(p[0], p[1], rest_z)).collect();
                let pts = resample_polyline(&poly, spacing);
                let mid = pts.get(pts.len() / 2).copied().unwrap_or(origin);
                (pts, mid)
            }
        };
        if pts.len() < 2 {
            return Err(HarnessError::InvalidScenario("layout yields fewer than two particles".into()));
        }
        let goal = pts
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.distance(goal_hint).total_cmp(&b.1.distance(goal_hint)))
            .map(|(i, _)| i)
            .expect("nonempty");
        Ok((pts, goal))
    }
}

/// Scripted operator. Horizontal approach directions point from the goal
/// toward the start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Script {
    /// Direct line from the start pose to the goal particle.
    StraightLineToTarget {
        #[serde(default = "d_speed")]
        speed: f64,
        #[serde(default = "d_distance")]
        distance: f64,
        #[serde(default = "d_height")]
        height: f64,
        #[serde(default = "d_from")]
        from: [f64; 2],
    },
    /// Straight down onto the goal from above.
    HoverDescend {
        #[serde(default = "d_speed")]
        speed: f64,
        #[serde(default = "d_hover")]
        height: f64,
    },
    /// Line approach that reverses before arriving, then comes back.
    Breakaway {
        #[serde(default = "d_speed")]
        speed: f64,
        #[serde(default = "d_distance")]
        distance: f64,
        #[serde(default = "d_height")]
        height: f64,
        #[serde(default = "d_from")]
        from: [f64; 2],
        #[serde(default = "d_turn")]
        turn_at: f64,
        #[serde(default = "d_retreat")]
        retreat_time: f64,
    },
    /// Line approach ending beside the goal instead of on it.
    OffsetApproach {
        #[serde(default = "d_speed")]
        speed: f64,
        #[serde(default = "d_distance")]
        distance: f64,
        #[serde(default = "d_height")]
        height: f64,
        #[serde(default = "d_from")]
        from: [f64; 2],
        #[serde(default = "d_offset")]
        offset: f64,
    },
}

fn d_speed() -> f64 {
    0.1
}
fn d_distance() -> f64 {
    0.30
}
fn d_height() -> f64 {
    0.045
}
fn d_from() -> [f64; 2] {
    [0.0, -1.0]
}
fn d_hover() -> f64 {
    0.20
}
fn d_turn() -> f64 {
    0.05
}
fn d_retreat() -> f64 {
    1.0
}
fn d_offset() -> f64 {
    0.02
}

impl Script {
    pub fn name(&self) -> &'static str {
        match self {
            Script::StraightLineToTarget { .. } => "straight-line-to-target",
            Script::HoverDescend { .. } => "hover-descend",
            Script::Breakaway { .. } => "breakaway",
            Script::OffsetApproach { .. } => "offset-approach",
        }
    }

    pub fn speed(&self) -> f64 {
        match *self {
            Script::StraightLineToTarget { speed, .. }
            | Script::HoverDescend { speed, .. }
            | Script::Breakaway { speed, .. }
            | Script::OffsetApproach { speed, .. } => speed,
        }
    }

    fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::InvalidScenario(m.to_string()));
        if !(self.speed() > 0.0) {
            return bad("script speed must be positive");
        }
        match *self {
            Script::HoverDescend { height, .. } if !(height > 0.0) => bad("hover height must be positive"),
            Script::StraightLineToTarget { distance, from, .. }
            | Script::Breakaway { distance, from, .. }
            | Script::OffsetApproach { distance, from, .. } => {
                if !(distance > 0.0) {
                    bad("approach distance must be positive")
                } else if !(from[0].hypot(from[1]) > 0.0) {
                    bad("approach direction must be nonzero")
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

/// One closed-loop run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: String,
    pub mode: Mode,
    pub rope: RopeKind,
    pub seed: u64,
    /// Seconds.
    pub duration_limit: f64,
    pub layout: Layout,
    pub script: Script,
    #[serde(default = "d_spacing")]
    pub spacing: f64,
    /// Particle the operator means to pick up; defaults per layout.
    #[serde(default)]
    pub goal: Option<usize>,
    /// Filter parameter overrides, same keys as a filter config file.
    #[serde(default)]
    pub params: Option<toml::Table>,
    #[serde(default)]
    pub sim: SimConfig,
    /// Control ticks per perception update.
    #[serde(default = "d_perception_period")]
    pub perception_period: u64,
}

impl Scenario {
    pub fn from_toml_str(s: &str) -> Result<Self, HarnessError> {
        let sc: Scenario = toml::from_str(s).map_err(|e| HarnessError::InvalidScenario(e.to_string()))?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let s = std::fs::read_to_string(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&s).map_err(|e| match e {
            HarnessError::InvalidScenario(m) => HarnessError::InvalidScenario(format!("{}: {m}", path.display())),
            e => e,
        })
    }

    /// All `*.toml` files of a directory, in file-name order.
    pub fn load_dir(dir: &Path) -> Result<Vec<Self>, HarnessError> {
        let rd = std::fs::read_dir(dir).map_err(|e| HarnessError::Io(format!("{}: {e}", dir.display())))?;
        let mut paths: Vec<_> = rd
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "toml"))
            .collect();
        paths.sort();
        paths.iter().map(|p| Self::load(p)).collect()
    }

    pub fn to_toml_string(&self) -> Result<String, HarnessError> {
        toml::to_string(self).map_err(|e| HarnessError::InvalidScenario(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::InvalidScenario(m));
        if self.id.is_empty() {
            return bad("empty scenario id".into());
        }
        if !(self.duration_limit > 0.0) || !self.duration_limit.is_finite() {
            return bad(format!("duration_limit must be positive, got {}", self.duration_limit));
        }
        if !(self.spacing > 0.0) {
            return bad("spacing must be positive".into());
        }
        if self.perception_period == 0 {
            return bad("perception_period must be at least 1".into());
        }
        self.script.validate()?;
        self.sim.validate().map_err(|e| HarnessError::InvalidScenario(e.to_string()))?;
        let (pts, _) = self.layout.particles(self.spacing, self.rest_height())?;
        if let Some(g) = self.goal {
            if g >= pts.len() {
                return bad(format!("goal index {g} outside rope of {} particles", pts.len()));
            }
        }
        self.assist_params()?;
        Ok(())
    }

    /// Height of a resting rope centerline.
    pub fn rest_height(&self) -> f64 {
        self.sim.table_z + self.rope.radius()
    }

    /// Filter parameters with scenario overrides applied.
    pub fn assist_params(&self) -> Result<AssistParams<f64>, HarnessError> {
        let table = self.params.clone().unwrap_or_default();
        let text = toml::to_string(&table).map_err(|e| HarnessError::InvalidScenario(e.to_string()))?;
        let p = AssistParams::<f64>::from_toml_str(&text).map_err(|e| HarnessError::InvalidScenario(e.to_string()))?;
        if p.cbf.dt != self.sim.dt {
            return Err(HarnessError::InvalidScenario(format!(
                "filter dt {} differs from sim dt {}",
                p.cbf.dt, self.sim.dt
            )));
        }
        p.validate().map_err(|e| HarnessError::InvalidScenario(e.to_string()))?;
        Ok(p)
    }

    /// Initial particles and the goal index.
    pub fn initial_rope(&self) -> Result<(Vec<Vec3<f64>>, usize), HarnessError> {
        let (pts, g) = self.layout.particles(self.spacing, self.rest_height())?;
        Ok((pts, self.goal.unwrap_or(g)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TEXT: &str = r#"
id = "hp-cbf"
mode = "SA_CBF"
rope = "blue"
seed = 7
duration_limit = 8.0

[layout]
kind = "hairpin"
leg = 0.3
gap = 0.04

[script]
kind = "straight-line-to-target"
speed = 0.12
"#;

    #[test]
    fn parses_with_defaults() {
        let s = Scenario::from_toml_str(TEXT).unwrap();
        assert_eq!(s.mode, Mode::Cbf);
        assert_eq!(s.rope, RopeKind::Blue);
        assert_eq!(s.perception_period, 10);
        assert_eq!(
            s.script,
            Script::StraightLineToTarget {
                speed: 0.12,
                distance: 0.30,
                height: 0.045,
                from: [0.0, -1.0]
            }
        );
        let p = s.assist_params().unwrap();
        assert_eq!(p, AssistParams::default());
        let (pts, g) = s.initial_rope().unwrap();
        assert!(pts[g].distance(Vec3::new(0.15, 0.04, 0.00635)) < 0.011);
        let back = Scenario::from_toml_str(&s.to_toml_string().unwrap()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn overrides_and_rejections() {
        let s = Scenario::from_toml_str(&format!("{TEXT}\n[params]\nz0 = 0.05\nlb = {{ c = 12.0 }}\n")).unwrap();
        let p = s.assist_params().unwrap();
        assert_eq!((p.cbf.z0, p.lb.c), (0.05, 12.0));

        for (from, to) in [
            ("duration_limit = 8.0", "duration_limit = 0.0"),
            ("rope = \"blue\"", "rope = \"purple\""),
            ("mode = \"SA_CBF\"", "mode = \"XX\""),
            ("kind = \"hairpin\"", "kind = \"spiral\""),
            ("speed = 0.12", "speed = -1.0"),
        ] {
            assert!(Scenario::from_toml_str(&TEXT.replace(from, to)).is_err(), "{to}");
        }
        assert!(Scenario::from_toml_str(&TEXT.replace("[layout]", "goal = 9999\n[layout]")).is_err());
    }
}
