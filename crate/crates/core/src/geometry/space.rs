use std::collections::HashMap;
use std::sync::RwLock;

use serde::{Deserialize, Serialize};

use super::{AbsolutePosition, EulerOrder, GeometryError, Homography, Orientation, Vector3};
use crate::units::{self, Unit};

/// Affine + perspective + unit transform relative to a parent space.
///
/// Coordinates local to the space relate to parent coordinates by
/// `local = R(S ∘ parent) + t`, so `parent = S⁻¹ ∘ R⁻¹(local − t)`. Zero
/// scale components act as 1. When a perspective is set, local (x, y) are
/// first warped by it on the way to the parent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ReferenceSpace {
    pub uid: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub display_name: Option<String>,
    #[serde(rename = "parentUID", skip_serializing_if = "Option::is_none", default)]
    pub parent_uid: Option<String>,
    pub unit: Unit,
    pub translation: Vector3,
    pub rotation: Orientation,
    pub scale: Vector3,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub perspective: Option<Homography>,
}

impl ReferenceSpace {
    /// A root space with no parent.
    pub fn root(uid: impl Into<String>, unit: Unit) -> Self {
        Self {
            uid: uid.into(),
            display_name: None,
            parent_uid: None,
            unit,
            translation: Vector3::ZERO,
            rotation: Orientation::IDENTITY,
            scale: Vector3::ONE,
            perspective: None,
        }
    }

    /// An identity space nested in `parent`, sharing its unit.
    pub fn child_of(uid: impl Into<String>, parent: &ReferenceSpace) -> Self {
        let mut s = Self::root(uid, parent.unit.clone());
        s.parent_uid = Some(parent.uid.clone());
        s
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.display_name = Some(name.into());
        self
    }

    pub fn with_unit(mut self, unit: Unit) -> Self {
        self.unit = unit;
        self
    }

    pub fn with_translation(mut self, x: f64, y: f64, z: f64) -> Self {
        self.translation = Vector3::new(x, y, z);
        self
    }

    pub fn with_scale(mut self, x: f64, y: f64, z: f64) -> Self {
        self.scale = Vector3::new(x, y, z);
        self
    }

    pub fn with_rotation(mut self, rotation: Orientation) -> Self {
        self.rotation = rotation.normalized();
        self
    }

    pub fn with_euler_rotation(
        self,
        angles: Vector3,
        order: EulerOrder,
        unit: &Unit,
    ) -> Result<Self, GeometryError> {
        let q = Orientation::from_euler(angles, order, unit)?;
        Ok(self.with_rotation(q))
    }

    pub fn with_perspective(mut self, h: Homography) -> Self {
        self.perspective = Some(h);
        self
    }

    /// Scale with zero components replaced by 1.
    pub fn effective_scale(&self) -> Vector3 {
        self.scale.map(|s| if s == 0.0 { 1.0 } else { s })
    }

    fn planar_scale(&self) -> f64 {
        let s = self.effective_scale();
        (s.x * s.y).abs().sqrt()
    }

    /// Maps a position expressed in this space into the parent space whose
    /// length unit is `parent_unit`.
    pub fn to_parent(
        &self,
        p: &AbsolutePosition,
        parent_unit: &Unit,
        parent_uid: &str,
    ) -> Result<AbsolutePosition, GeometryError> {
        if p.is_geographical() {
            return Err(GeometryError::Geographical);
        }
        let mut v = p.vector_in(&self.unit)?;
        if let Some(h) = &self.perspective {
            let (x, y) = h.apply(v.x, v.y)?;
            v.x = x;
            v.y = y;
        }
        let s = self.effective_scale();
        let r_inv = self.rotation.inverse();
        let local = r_inv.rotate(v - self.translation).component_div(&s);
        let f = self.unit.convert_to(1.0, parent_unit)?;

        let mut out = p.clone();
        out.vector = local * f;
        out.unit = parent_unit.clone();
        out.orientation = r_inv.mul(&p.orientation).normalized();
        out.velocity.linear = p.velocity.linear.component_div(&s);
        out.velocity.angular = r_inv.rotate(p.velocity.angular);
        if let Some(acc) = p.accuracy {
            if p.accuracy_unit.base_name() == "length" {
                let local_acc = p.accuracy_unit.convert_to(acc, &self.unit)? / self.planar_scale();
                out.accuracy = Some(self.unit.convert_to(local_acc, &p.accuracy_unit)?);
            }
        }
        out.reference_space_uid = Some(parent_uid.to_string());
        Ok(out)
    }

    /// Inverse of [`ReferenceSpace::to_parent`].
    pub fn from_parent(&self, p: &AbsolutePosition) -> Result<AbsolutePosition, GeometryError> {
        if p.is_geographical() {
            return Err(GeometryError::Geographical);
        }
        let g = p.vector_in(&self.unit)?;
        let s = self.effective_scale();
        let r = self.rotation.normalized();
        let mut v = r.rotate(g.component_mul(&s)) + self.translation;
        if let Some(h) = &self.perspective {
            let (x, y) = h.inverse()?.apply(v.x, v.y)?;
            v.x = x;
            v.y = y;
        }
        let mut out = p.clone();
        out.vector = v;
        out.unit = self.unit.clone();
        out.orientation = r.mul(&p.orientation).normalized();
        out.velocity.linear = p.velocity.linear.component_mul(&s);
        out.velocity.angular = r.rotate(p.velocity.angular);
        if let Some(acc) = p.accuracy {
            if p.accuracy_unit.base_name() == "length" {
                let local_acc = p.accuracy_unit.convert_to(acc, &self.unit)? * self.planar_scale();
                out.accuracy = Some(self.unit.convert_to(local_acc, &p.accuracy_unit)?);
            }
        }
        out.reference_space_uid = Some(self.uid.clone());
        Ok(out)
    }
}

/// Spaces known to a model, rooted at its global space.
#[derive(Debug)]
pub struct SpaceRegistry {
    global: ReferenceSpace,
    spaces: RwLock<HashMap<String, ReferenceSpace>>,
}

impl SpaceRegistry {
    pub fn new(global: ReferenceSpace) -> Self {
        Self {
            global,
            spaces: RwLock::new(HashMap::new()),
        }
    }

    pub fn with_default_global() -> Self {
        Self::new(ReferenceSpace::root(
            crate::model::new_uid(),
            units::meter(),
        ))
    }

    pub fn global(&self) -> &ReferenceSpace {
        &self.global
    }

    /// Adds or replaces a space. A space without a parent is attached to
    /// the global space.
    pub fn register(&self, mut space: ReferenceSpace) -> Result<(), GeometryError> {
        if space.uid == self.global.uid {
            return Err(GeometryError::InvalidSpace(
                "cannot replace the global space".into(),
            ));
        }
        if space.parent_uid.is_none() {
            space.parent_uid = Some(self.global.uid.clone());
        }
        self.spaces
            .write()
            .unwrap_or_else(|e| e.into_inner())
            .insert(space.uid.clone(), space);
        Ok(())
    }

    /// Every registered space except the global one, ordered by uid.
    pub fn spaces(&self) -> Vec<ReferenceSpace> {
        let mut all: Vec<ReferenceSpace> = self
            .spaces
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .values()
            .cloned()
            .collect();
        all.sort_by(|a, b| a.uid.cmp(&b.uid));
        all
    }

    pub fn get(&self, uid: &str) -> Option<ReferenceSpace> {
        if uid == self.global.uid {
            return Some(self.global.clone());
        }
        self.spaces
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .get(uid)
            .cloned()
    }

    fn parent_of(&self, space: &ReferenceSpace) -> Result<ReferenceSpace, GeometryError> {
        let uid = space.parent_uid.as_deref().unwrap_or(&self.global.uid);
        self.get(uid)
            .ok_or_else(|| GeometryError::DanglingSpace(uid.to_string()))
    }

    /// Spaces from `space` (inclusive) up to, excluding, the global space.
    fn chain(&self, space: &ReferenceSpace) -> Result<Vec<ReferenceSpace>, GeometryError> {
        let limit = self.spaces.read().unwrap_or_else(|e| e.into_inner()).len() + 2;
        let mut chain = Vec::new();
        let mut cur = space.clone();
        while cur.uid != self.global.uid {
            if chain.len() > limit {
                return Err(GeometryError::InvalidSpace(format!(
                    "cyclic parent chain through `{}`",
                    space.uid
                )));
            }
            let parent = self.parent_of(&cur)?;
            chain.push(cur);
            cur = parent;
        }
        Ok(chain)
    }

    /// Transforms a position expressed in `space` into the global space.
    pub fn to_global_from(
        &self,
        p: &AbsolutePosition,
        space: &ReferenceSpace,
    ) -> Result<AbsolutePosition, GeometryError> {
        let mut out = p.clone();
        for s in self.chain(space)? {
            let parent = self.parent_of(&s)?;
            out = s.to_parent(&out, &parent.unit, &parent.uid)?;
        }
        if !out.is_geographical() {
            out = out.converted(&self.global.unit)?;
        }
        out.reference_space_uid = Some(self.global.uid.clone());
        Ok(out)
    }

    /// Transforms a global position into `space`.
    pub fn from_global_to(
        &self,
        p: &AbsolutePosition,
        space: &ReferenceSpace,
    ) -> Result<AbsolutePosition, GeometryError> {
        let mut out = p.clone();
        if space.uid == self.global.uid {
            out.reference_space_uid = Some(self.global.uid.clone());
            return Ok(out);
        }
        for s in self.chain(space)?.iter().rev() {
            out = s.from_parent(&out)?;
        }
        Ok(out)
    }

    pub fn to_global(
        &self,
        p: &AbsolutePosition,
        space_uid: &str,
    ) -> Result<AbsolutePosition, GeometryError> {
        let space = self
            .get(space_uid)
            .ok_or_else(|| GeometryError::DanglingSpace(space_uid.to_string()))?;
        self.to_global_from(p, &space)
    }

    pub fn from_global(
        &self,
        p: &AbsolutePosition,
        space_uid: &str,
    ) -> Result<AbsolutePosition, GeometryError> {
        let space = self
            .get(space_uid)
            .ok_or_else(|| GeometryError::DanglingSpace(space_uid.to_string()))?;
        self.from_global_to(p, &space)
    }
}
