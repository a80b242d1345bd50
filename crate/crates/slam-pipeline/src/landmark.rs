use std::collections::VecDeque;

use factor_graph::VariableKey;
use nalgebra::Vector3;
use quadric_core::{Quadric, RigidTransform};

/// Sensor-frame inlier points of one observation, kept for reconstruction.
#[derive(Debug, Clone, PartialEq)]
pub struct ArchiveEntry {
    pub frame: usize,
    pub points: Vec<Vector3<f64>>,
    pub colors: Vec<[u8; 3]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Landmark {
    pub id: usize,
    /// World-frame estimate: the optimised value once promoted, the latest
    /// observation mapped through the predicted pose before that.
    pub quadric: Quadric,
    pub observation_count: usize,
    /// Observations awaiting promotion, as `(frame, sensor-frame quadric)`.
    pub buffered: Vec<(usize, Quadric)>,
    pub archive: VecDeque<ArchiveEntry>,
    promoted: bool,
}

impl Landmark {
    pub(crate) fn new(id: usize, frame: usize, observed: Quadric, pose: &RigidTransform) -> Self {
        Self {
            id,
            quadric: observed.to_world(pose),
            observation_count: 1,
            buffered: vec![(frame, observed)],
            archive: VecDeque::new(),
            promoted: false,
        }
    }

    pub fn key(&self) -> VariableKey {
        VariableKey::Quadric(self.id, self.quadric.class())
    }

    pub fn is_pending(&self) -> bool {
        !self.promoted
    }

    pub(crate) fn mark_promoted(&mut self) {
        self.promoted = true;
        self.buffered.clear();
    }

    /// Keeps at most `max_points` evenly spaced points and drops entries
    /// older than `window` frames.
    pub(crate) fn archive_points(
        &mut self,
        entry: ArchiveEntry,
        max_points: usize,
        window: usize,
    ) {
        let frame = entry.frame;
        let stride = entry.points.len().div_ceil(max_points.max(1)).max(1);
        let colors = if entry.colors.len() == entry.points.len() {
            entry.colors.into_iter().step_by(stride).collect()
        } else {
            Vec::new()
        };
        self.archive.push_back(ArchiveEntry {
            frame,
            points: entry.points.into_iter().step_by(stride).collect(),
            colors,
        });
        while self
            .archive
            .front()
            .is_some_and(|e| e.frame + window <= frame)
        {
            self.archive.pop_front();
        }
    }
}
