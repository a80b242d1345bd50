use std::fmt;

use nalgebra::Matrix4;

use crate::{HomogeneousQuadricMatrix, QuadricError, Result};

/// Sign pattern of the canonical quadric `diag(σ)`.
///
/// Entries are ordered `+1`, then `-1`, then `0`. The one exception is the
/// circular cylinder, whose canonical form `x² + y² - 1 = 0` keeps the zero in
/// the third (z) slot so the cylinder axis is the quadric-frame z axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Signature([i8; 4]);

impl Signature {
    pub const PLANE: Signature = Signature([1, 0, 0, 0]);
    pub const SPHERE: Signature = Signature([1, 1, 1, -1]);
    pub const CIRCULAR_CYLINDER: Signature = Signature([1, 1, 0, -1]);
    pub const CIRCULAR_CONE: Signature = Signature([1, 1, -1, 0]);

    /// Validates a signature. Accepts the sorted patterns whose canonical
    /// quadric contains a real surface, plus the permuted cylinder pattern.
    pub fn new(entries: [i8; 4]) -> Result<Self> {
        if entries == Self::CIRCULAR_CYLINDER.0 {
            return Ok(Self(entries));
        }
        let rank = |e: i8| match e {
            1 => Some(0),
            -1 => Some(1),
            0 => Some(2),
            _ => None,
        };
        let mut ranks = [0u8; 4];
        for (r, &e) in ranks.iter_mut().zip(entries.iter()) {
            *r = rank(e).ok_or(QuadricError::UnsupportedSignature(entries))?;
        }
        if ranks.windows(2).any(|w| w[0] > w[1]) {
            return Err(QuadricError::UnsupportedSignature(entries));
        }
        let pos = entries.iter().filter(|&&e| e == 1).count();
        let neg = entries.iter().filter(|&&e| e == -1).count();
        // Indefinite forms are real surfaces; among semi-definite ones only the
        // rank-one doubled plane is.
        let real_surface = pos >= 1 && (neg >= 1 || pos + neg == 1);
        if !real_surface {
            return Err(QuadricError::UnsupportedSignature(entries));
        }
        Ok(Self(entries))
    }

    pub fn entries(&self) -> [i8; 4] {
        self.0
    }

    pub fn as_f64(&self) -> [f64; 4] {
        self.0.map(f64::from)
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|e| format!("{e:+}")).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Quadric class as determined by the front-end.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum QuadricClass {
    General,
    Plane,
    Sphere,
    CircularCylinder,
    CircularCone,
}

impl QuadricClass {
    pub const ALL: [QuadricClass; 5] = [
        QuadricClass::General,
        QuadricClass::Plane,
        QuadricClass::Sphere,
        QuadricClass::CircularCylinder,
        QuadricClass::CircularCone,
    ];

    /// Classes with a fixed signature and a reduced tangent space.
    pub const CONSTRAINED: [QuadricClass; 4] = [
        QuadricClass::Plane,
        QuadricClass::Sphere,
        QuadricClass::CircularCylinder,
        QuadricClass::CircularCone,
    ];

    /// Dimension of the minimal parameterisation.
    pub fn dof(&self) -> usize {
        match self {
            QuadricClass::General => 9,
            QuadricClass::Plane => 3,
            QuadricClass::Sphere => 4,
            QuadricClass::CircularCylinder => 5,
            QuadricClass::CircularCone => 6,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            QuadricClass::General => "general",
            QuadricClass::Plane => "plane",
            QuadricClass::Sphere => "sphere",
            QuadricClass::CircularCylinder => "cylinder",
            QuadricClass::CircularCone => "cone",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == name)
    }
}

impl fmt::Display for QuadricClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Signature of a constrained class. The general class has no fixed
/// signature; the caller must supply one.
pub fn class_signature(class: QuadricClass) -> Result<Signature> {
    match class {
        QuadricClass::General => Err(QuadricError::SignatureRequired),
        QuadricClass::Plane => Ok(Signature::PLANE),
        QuadricClass::Sphere => Ok(Signature::SPHERE),
        QuadricClass::CircularCylinder => Ok(Signature::CIRCULAR_CYLINDER),
        QuadricClass::CircularCone => Ok(Signature::CIRCULAR_CONE),
    }
}

/// `diag(σ)`: the unit-scale quadric aligned with its own frame.
pub fn canonical_matrix(sig: Signature) -> HomogeneousQuadricMatrix {
    let [a, b, c, d] = sig.as_f64();
    HomogeneousQuadricMatrix::from_raw(Matrix4::from_diagonal(&nalgebra::Vector4::new(a, b, c, d)))
}
