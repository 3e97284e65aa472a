use serde::{Deserialize, Serialize};

use crate::world::{CameraId, PersonId, Trajectory};

/// Default intra-camera occlusion gap: 100 frames at 23 FPS.
pub const DEFAULT_FRAME_GAP_S: f64 = 4.3;

/// Identifies one transition: the person and the index of its source visit.
pub type TransitionKey = (PersonId, u32);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionRecord {
    pub person: PersonId,
    pub seq: u32,
    pub from_cam: CameraId,
    pub to_cam: CameraId,
    pub exit_time: f64,
    pub enter_time: f64,
    /// `enter_time - exit_time`; negative for overlapping fields of view.
    pub transit: f64,
    /// Length of the source visit.
    pub duration_prev: f64,
}

impl TransitionRecord {
    pub fn key(&self) -> TransitionKey {
        (self.person, self.seq)
    }

    pub fn is_self_loop(&self) -> bool {
        self.from_cam == self.to_cam
    }
}

/// One record per consecutive visit pair, after merging same-camera visits
/// separated by at most `frame_gap_s`.
pub fn extract_transitions(trajectories: &[Trajectory], frame_gap_s: f64) -> Vec<TransitionRecord> {
    let mut out = Vec::new();
    for t in trajectories {
        let merged = t.merged(frame_gap_s);
        for (i, w) in merged.visits.windows(2).enumerate() {
            let (a, b) = (&w[0], &w[1]);
            out.push(TransitionRecord {
                person: t.person,
                seq: i as u32,
                from_cam: a.camera.clone(),
                to_cam: b.camera.clone(),
                exit_time: a.exit,
                enter_time: b.enter,
                transit: b.enter - a.exit,
                duration_prev: a.exit - a.enter,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::Visit;

    fn traj(visits: Vec<Visit>) -> Trajectory {
        Trajectory { person: 1, visits }
    }

    #[test]
    fn single_visit_has_no_transition() {
        let t = traj(vec![Visit::new("c01", 0.0, 4.0)]);
        assert!(extract_transitions(&[t], DEFAULT_FRAME_GAP_S).is_empty());
    }

    #[test]
    fn worked_transit_keeps_full_precision() {
        let t = traj(vec![Visit::new("c05", 90.0, 100.0), Visit::new("c08", 108.9, 115.0)]);
        let r = extract_transitions(&[t], DEFAULT_FRAME_GAP_S);
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].transit, 108.9 - 100.0);
        assert!((r[0].transit - 8.9).abs() < 1e-9);
    }

    #[test]
    fn long_gap_yields_self_transition() {
        let t = traj(vec![
            Visit::new("c01", 0.0, 10.0),
            Visit::new("c01", 20.0, 25.0),
            Visit::new("c02", 24.0, 30.0),
        ]);
        let r = extract_transitions(&[t], DEFAULT_FRAME_GAP_S);
        assert_eq!(r.len(), 2);
        assert!(r[0].is_self_loop());
        assert_eq!(r[0].transit, 10.0);
        assert_eq!(r[1].transit, -1.0);
        assert_eq!(r[1].duration_prev, 5.0);
    }

    #[test]
    fn short_gap_is_merged() {
        let t = traj(vec![
            Visit::new("c01", 0.0, 10.0),
            Visit::new("c01", 14.0, 25.0),
            Visit::new("c02", 30.0, 31.0),
        ]);
        let r = extract_transitions(&[t], DEFAULT_FRAME_GAP_S);
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].duration_prev, 25.0);
    }
}
