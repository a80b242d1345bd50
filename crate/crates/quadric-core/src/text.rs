//! One-line text form of a quadric:
//!
//! ```text
//! <class> tx ty tz qw qx qy qz alpha beta gamma
//! ```
//!
//! `<class>` is `plane`, `sphere`, `cylinder`, `cone`, or `general:s1,s2,s3,s4`
//! with the signature entries written as `+1`, `-1` or `0`. The rotation is a
//! unit quaternion. Floats use the shortest round-tripping representation.

use nalgebra::{Quaternion, UnitQuaternion, Vector3};

use crate::{QuadricClass, Quadric, QuadricError, Result, RigidTransform, ScaleDiag, Signature};

pub fn format_quadric(q: &Quadric) -> String {
    let class = match q.class() {
        QuadricClass::General => {
            let e = q.signature().entries();
            format!("general:{:+},{:+},{:+},{:+}", e[0], e[1], e[2], e[3])
                .replace("+0", "0")
        }
        c => c.name().to_string(),
    };
    let t = q.pose().translation();
    let r = q.pose().quaternion();
    let s = q.scale();
    format!(
        "{class} {} {} {} {} {} {} {} {} {} {}",
        t.x, t.y, t.z, r.w, r.i, r.j, r.k, s.alpha, s.beta, s.gamma
    )
}

pub fn parse_quadric(line: &str) -> Result<Quadric> {
    let err = |m: String| QuadricError::Parse(m);
    let mut fields = line.split_whitespace();
    let class_tok = fields.next().ok_or_else(|| err("empty line".into()))?;
    let nums: Vec<f64> = fields
        .map(|f| f.parse::<f64>().map_err(|e| err(format!("{f:?}: {e}"))))
        .collect::<Result<_>>()?;
    if nums.len() != 10 {
        return Err(err(format!("expected 10 numbers, got {}", nums.len())));
    }
    let q = Quaternion::new(nums[3], nums[4], nums[5], nums[6]);
    if (q.norm() - 1.0).abs() > 1e-6 {
        return Err(err(format!("quaternion norm {} is not 1", q.norm())));
    }
    let pose = RigidTransform::from_quaternion(
        &UnitQuaternion::from_quaternion(q),
        Vector3::new(nums[0], nums[1], nums[2]),
    );
    let scale = ScaleDiag::new(nums[7], nums[8], nums[9])?;
    if let Some(sig) = class_tok.strip_prefix("general:") {
        let entries: Vec<i8> = sig
            .split(',')
            .map(|e| e.parse::<i8>().map_err(|x| err(format!("signature {e:?}: {x}"))))
            .collect::<Result<_>>()?;
        let entries: [i8; 4] = entries
            .try_into()
            .map_err(|_| err(format!("signature {sig:?} needs 4 entries")))?;
        return Ok(Quadric::general(Signature::new(entries)?, pose, scale));
    }
    let class = QuadricClass::from_name(class_tok)
        .filter(|c| *c != QuadricClass::General)
        .ok_or_else(|| err(format!("unknown class {class_tok:?}")))?;
    Quadric::new(class, pose, scale)
}
