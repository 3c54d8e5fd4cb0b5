use serde::{Deserialize, Serialize};

/// Horizon (s) over which the linear degradation law runs from `k1 + k2` to `k1`.
pub const LINEAR_HORIZON: f64 = 20.0;

/// Total stiffness K(t) of the two parallel springs, in N/mm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum StiffnessSchedule {
    Constant { k: f64 },
    /// Spring `k2` snaps at `t_s`; the damaged branch applies for `t >= t_s`.
    Step { k1: f64, k2: f64, t_s: f64 },
    /// Spring `k2` degrades linearly, `K(t) = k1 + k2 (1 - t / horizon)`.
    Linear { k1: f64, k2: f64, horizon: f64 },
}

impl StiffnessSchedule {
    pub fn step(k1: f64, k2: f64, t_s: f64) -> Self {
        StiffnessSchedule::Step { k1, k2, t_s }
    }

    pub fn linear(k1: f64, k2: f64) -> Self {
        StiffnessSchedule::Linear {
            k1,
            k2,
            horizon: LINEAR_HORIZON,
        }
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            StiffnessSchedule::Constant { k } => k,
            StiffnessSchedule::Step { k1, k2, t_s } => {
                if t < t_s {
                    k1 + k2
                } else {
                    k1
                }
            }
            StiffnessSchedule::Linear { k1, k2, horizon } => k1 + k2 * (1.0 - t / horizon),
        }
    }

    /// Largest stiffness reached on `[0, horizon]`.
    pub fn max_stiffness(&self) -> f64 {
        match *self {
            StiffnessSchedule::Constant { k } => k,
            StiffnessSchedule::Step { k1, k2, .. } | StiffnessSchedule::Linear { k1, k2, .. } => {
                k1.max(k1 + k2)
            }
        }
    }
}

pub fn eval_stiffness(schedule: &StiffnessSchedule, t: f64) -> f64 {
    schedule.eval(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_schedule_switches_at_t_s() {
        let s = StiffnessSchedule::step(70.0, 10.0, 10.0);
        assert_eq!(eval_stiffness(&s, 9.99), 80.0);
        assert_eq!(eval_stiffness(&s, 10.0), 70.0);
        assert_eq!(eval_stiffness(&s, 0.0), 80.0);
    }

    #[test]
    fn linear_schedule_endpoints_and_midpoint() {
        let s = StiffnessSchedule::linear(70.0, 10.0);
        assert_eq!(s.eval(0.0), 80.0);
        assert_eq!(s.eval(10.0), 75.0);
        assert_eq!(s.eval(20.0), 70.0);
    }

    #[test]
    fn serde_tagging() {
        let s = StiffnessSchedule::step(10.0, 70.0, 10.0);
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(json, r#"{"kind":"step","k1":10.0,"k2":70.0,"t_s":10.0}"#);
        let back: StiffnessSchedule = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
    }
}
