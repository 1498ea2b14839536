use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geom::Vec3;

use super::Script;

/// Height the operator lifts the rope after closing the jaw.
pub const LIFT_HEIGHT: f64 = 0.10;
/// Half-width of the uniform start-position jitter.
pub const START_JITTER: f64 = 0.01;

/// Scripted human hand: a constant-speed polyline, then a vertical lift once
/// the jaw has closed.
#[derive(Debug, Clone)]
pub struct Operator {
    points: Vec<Vec3<f64>>,
    /// Arrival time at each point.
    times: Vec<f64>,
    speed: f64,
    lift: Option<(f64, Vec3<f64>)>,
}

fn horizontal_unit(v: [f64; 2]) -> Vec3<f64> {
    let n = v[0].hypot(v[1]);
    Vec3::new(v[0] / n, v[1] / n, 0.0)
}

impl Operator {
    /// `tangent` is the rope direction at the goal; the offset script ends
    /// beside the rope, on the side the approach comes from.
    pub fn new(script: &Script, goal: Vec3<f64>, tangent: Vec3<f64>, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let jitter = Vec3::new(
            rng.gen_range(-START_JITTER..=START_JITTER),
            rng.gen_range(-START_JITTER..=START_JITTER),
            0.0,
        );
        let line_start = |from: [f64; 2], distance: f64, height: f64| {
            let p = goal + horizontal_unit(from) * distance + jitter;
            Vec3::new(p.x, p.y, height)
        };
        let points = match *script {
            Script::StraightLineToTarget { distance, height, from, .. } => vec![line_start(from, distance, height), goal],
            Script::HoverDescend { height, .. } => vec![goal + jitter + Vec3::new(0.0, 0.0, height), goal],
            Script::Breakaway {
                speed,
                distance,
                height,
                from,
                turn_at,
                retreat_time,
            } => {
                let s = line_start(from, distance, height);
                let back = (s - goal).normalized().unwrap_or(Vec3::new(0.0, 0.0, 1.0));
                let turn = goal + back * turn_at.min(s.distance(goal));
                let retreat = turn + back * (speed * retreat_time);
                vec![s, turn, retreat, goal]
            }
            Script::OffsetApproach {
                distance,
                height,
                from,
                offset,
                ..
            } => {
                let f = horizontal_unit(from);
                let mut side = Vec3::new(-tangent.y, tangent.x, 0.0).normalized().unwrap_or(f);
                if side.dot(f) < 0.0 {
                    side = -side;
                }
                vec![line_start(from, distance, height), goal + side * offset]
            }
        };
        let speed = script.speed();
        let mut times = vec![0.0];
        for w in points.windows(2) {
            let last = *times.last().expect("nonempty");
            times.push(last + w[0].distance(w[1]) / speed);
        }
        Self {
            points,
            times,
            speed,
            lift: None,
        }
    }

    pub fn start(&self) -> Vec3<f64> {
        self.points[0]
    }

    /// Time at which the scripted approach ends.
    pub fn approach_time(&self) -> f64 {
        *self.times.last().expect("nonempty")
    }

    /// Hand position and velocity at time `t`.
    pub fn sample(&self, t: f64) -> (Vec3<f64>, Vec3<f64>) {
        if let Some((t0, base)) = self.lift {
            let rise = self.speed * (t - t0).max(0.0);
            return if rise >= LIFT_HEIGHT {
                (base + Vec3::new(0.0, 0.0, LIFT_HEIGHT), Vec3::zeros())
            } else {
                (base + Vec3::new(0.0, 0.0, rise), Vec3::new(0.0, 0.0, self.speed))
            };
        }
        let k = self.times.partition_point(|&ti| ti <= t);
        if k >= self.points.len() {
            return (*self.points.last().expect("nonempty"), Vec3::zeros());
        }
        let (a, b) = (self.points[k - 1], self.points[k]);
        let span = self.times[k] - self.times[k - 1];
        let dir = (b - a).normalized().unwrap_or(Vec3::zeros());
        (a.lerp(b, (t - self.times[k - 1]) / span), dir * self.speed)
    }

    /// Switches to the vertical lift from wherever the hand is at `t`.
    pub fn begin_lift(&mut self, t: f64) {
        if self.lift.is_none() {
            let (p, _) = self.sample(t);
            self.lift = Some((t, p));
        }
    }

    pub fn lifting(&self) -> bool {
        self.lift.is_some()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const X: Vec3<f64> = Vec3 { x: 1.0, y: 0.0, z: 0.0 };

    fn line() -> Script {
        Script::StraightLineToTarget {
            speed: 0.1,
            distance: 0.3,
            height: 0.045,
            from: [0.0, -1.0],
        }
    }

    #[test]
    fn line_reaches_goal_at_constant_speed() {
        let goal = Vec3::new(0.1, 0.2, 0.006);
        let op = Operator::new(&line(), goal, X, 3);
        let s = op.start();
        assert!((s.x - 0.1).abs() <= START_JITTER && (s.y - (0.2 - 0.3)).abs() <= START_JITTER);
        assert_eq!(s.z, 0.045);
        let t_end = op.approach_time();
        assert!((t_end - s.distance(goal) / 0.1).abs() < 1e-12);
        let (p, v) = op.sample(t_end / 2.0);
        assert!(p.distance(s.lerp(goal, 0.5)) < 1e-12);
        assert!((v.norm() - 0.1).abs() < 1e-12);
        let (p, v) = op.sample(t_end + 1.0);
        assert_eq!((p, v), (goal, Vec3::zeros()));
        assert_eq!(Operator::new(&line(), goal, X, 3).start(), s);
    }

    #[test]
    fn breakaway_reverses_then_returns() {
        let goal = Vec3::zeros();
        let sc = Script::Breakaway {
            speed: 0.1,
            distance: 0.3,
            height: 0.0,
            from: [1.0, 0.0],
            turn_at: 0.05,
            retreat_time: 1.0,
        };
        let op = Operator::new(&sc, goal, X, 0);
        let t_turn = op.start().distance(goal) / 0.1 - 0.5;
        let (_, v_in) = op.sample(t_turn - 0.1);
        let (p_turn, _) = op.sample(t_turn);
        let (_, v_out) = op.sample(t_turn + 0.5);
        assert!(v_in.dot(v_out) < 0.0);
        assert!((p_turn.distance(goal) - 0.05).abs() < 1e-9);
        assert_eq!(op.sample(op.approach_time() + 0.01).0, goal);
    }

    #[test]
    fn offset_ends_beside_goal_and_lift_rises() {
        let goal = Vec3::new(0.0, 0.0, 0.006);
        let sc = Script::OffsetApproach {
            speed: 0.1,
            distance: 0.3,
            height: 0.045,
            from: [0.0, -1.0],
            offset: 0.02,
        };
        let mut op = Operator::new(&sc, goal, X, 1);
        let t = op.approach_time() + 0.5;
        let end = op.sample(t).0;
        assert!(end.distance(goal - Vec3::new(0.0, 0.02, 0.0)) < 1e-12);
        op.begin_lift(t);
        assert!(op.lifting());
        assert!((op.sample(t + 0.5).0.z - (0.006 + 0.05)).abs() < 1e-12);
        assert_eq!(op.sample(t + 5.0).0, end + Vec3::new(0.0, 0.0, LIFT_HEIGHT));
    }
}
