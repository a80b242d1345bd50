use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{DVectorView, Vector6};
use quadric_core::{boxplus, Quadric, QuadricClass, RigidTransform, TangentVector};

use crate::{GraphError, Result};

/// Identifies a variable. Keys order poses before quadrics, then by index,
/// which fixes the column layout of the linear system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VariableKey {
    Pose(usize),
    Quadric(usize, QuadricClass),
}

impl VariableKey {
    /// Tangent dimension of the variable.
    pub fn dim(&self) -> usize {
        match self {
            VariableKey::Pose(_) => 6,
            VariableKey::Quadric(_, class) => class.dof(),
        }
    }
}

impl fmt::Display for VariableKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VariableKey::Pose(i) => write!(f, "x{i}"),
            VariableKey::Quadric(i, class) => write!(f, "q{i}({class})"),
        }
    }
}

/// Current values of all poses and quadric landmarks.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GraphEstimate {
    poses: BTreeMap<usize, RigidTransform>,
    quadrics: BTreeMap<usize, Quadric>,
}

impl GraphEstimate {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert_pose(&mut self, index: usize, pose: RigidTransform) -> VariableKey {
        self.poses.insert(index, pose);
        VariableKey::Pose(index)
    }

    pub fn insert_quadric(&mut self, index: usize, quadric: Quadric) -> VariableKey {
        let key = VariableKey::Quadric(index, quadric.class());
        self.quadrics.insert(index, quadric);
        key
    }

    pub fn pose(&self, index: usize) -> Option<&RigidTransform> {
        self.poses.get(&index)
    }

    pub fn quadric(&self, index: usize) -> Option<&Quadric> {
        self.quadrics.get(&index)
    }

    pub fn poses(&self) -> impl Iterator<Item = (usize, &RigidTransform)> {
        self.poses.iter().map(|(i, p)| (*i, p))
    }

    pub fn quadrics(&self) -> impl Iterator<Item = (usize, &Quadric)> {
        self.quadrics.iter().map(|(i, q)| (*i, q))
    }

    /// All keys in layout order.
    pub fn keys(&self) -> Vec<VariableKey> {
        let poses = self.poses.keys().map(|&i| VariableKey::Pose(i));
        let quadrics = self
            .quadrics
            .iter()
            .map(|(&i, q)| VariableKey::Quadric(i, q.class()));
        poses.chain(quadrics).collect()
    }

    pub fn len(&self) -> usize {
        self.poses.len() + self.quadrics.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub(crate) fn require_pose(&self, index: usize) -> Result<&RigidTransform> {
        self.pose(index)
            .ok_or(GraphError::MissingVariable(VariableKey::Pose(index)))
    }

    pub(crate) fn require_quadric(&self, index: usize, class: QuadricClass) -> Result<&Quadric> {
        match self.quadric(index) {
            Some(q) if q.class() == class => Ok(q),
            _ => Err(GraphError::MissingVariable(VariableKey::Quadric(index, class))),
        }
    }

    /// Apply a tangent step to one variable.
    pub fn retract(&mut self, key: VariableKey, delta: DVectorView<'_, f64>) -> Result<()> {
        match key {
            VariableKey::Pose(i) => {
                let pose = self.require_pose(i)?;
                let xi = Vector6::from_iterator(delta.iter().copied());
                let moved = pose.retract(&xi).renormalized();
                self.poses.insert(i, moved);
            }
            VariableKey::Quadric(i, class) => {
                let q = self.require_quadric(i, class)?;
                let moved = boxplus(q, &TangentVector::new(delta.into_owned()))?;
                let moved = moved.with_pose(moved.pose().renormalized());
                self.quadrics.insert(i, moved);
            }
        }
        Ok(())
    }
}
