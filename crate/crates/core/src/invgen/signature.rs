use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::network::Bindings;
use crate::so3::{self, irrep_matrix, rotate_cartesian, Rotation};
use crate::tensor::Tensor;

/// Largest Cartesian rank accepted in a signature.
pub const MAX_RANK: usize = 4;
/// Largest irreducible type accepted in a signature.
pub const MAX_TYPE: usize = 4;

/// How one input slot transforms.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum SlotSpec {
    /// Rank-r tensor, every axis a 3D vector index.
    Cartesian(usize),
    /// Vector of an irreducible type, `2l+1` components.
    Spherical(usize),
    /// Direct sum of irreducible types, components concatenated in order.
    Sum(Vec<usize>),
}

impl SlotSpec {
    /// Shape of a tensor bound to this slot.
    pub fn shape(&self) -> Vec<usize> {
        match self {
            SlotSpec::Cartesian(r) => vec![3; *r],
            SlotSpec::Spherical(l) => vec![2 * l + 1],
            SlotSpec::Sum(types) => vec![types.iter().map(|l| 2 * l + 1).sum()],
        }
    }

    /// Number of extent-3 legs a copy of this slot contributes once wrapped
    /// by its projector.
    pub fn cartesian_legs(&self) -> usize {
        match self {
            SlotSpec::Cartesian(r) => *r,
            SlotSpec::Spherical(l) => *l,
            SlotSpec::Sum(types) => so3::sum_projector_rank(types),
        }
    }

    /// Applies the rotation to a tensor bound to this slot.
    pub fn act(&self, r: &Rotation, t: &Tensor) -> Result<Tensor> {
        if t.shape() != self.shape().as_slice() {
            return Err(Error::ShapeMismatch(format!(
                "slot {self} expects shape {:?}, got {:?}",
                self.shape(),
                t.shape()
            )));
        }
        match self {
            SlotSpec::Cartesian(_) => rotate_cartesian(r, t),
            SlotSpec::Spherical(l) => irrep_matrix(r, *l)?.apply(t),
            SlotSpec::Sum(types) => {
                let mut out = Vec::with_capacity(t.len());
                let mut off = 0;
                for &l in types {
                    let n = 2 * l + 1;
                    let part = Tensor::vector(&t.data()[off..off + n]);
                    out.extend(irrep_matrix(r, l)?.apply(&part)?.into_data());
                    off += n;
                }
                Tensor::new(t.shape().to_vec(), out)
            }
        }
    }

    /// Tensor of the right shape with entries uniform in `[-1, 1]`.
    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> Tensor {
        let shape = self.shape();
        let len = shape.iter().product();
        let data = (0..len).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        Tensor::new(shape, data).expect("length matches shape")
    }

    fn check_caps(&self) -> Result<()> {
        match self {
            SlotSpec::Cartesian(r) if *r > MAX_RANK => {
                Err(Error::Parse(format!("Cartesian rank {r} exceeds the cap of {MAX_RANK}")))
            }
            SlotSpec::Spherical(l) if *l > MAX_TYPE => {
                Err(Error::Parse(format!("type {l} exceeds the cap of {MAX_TYPE}")))
            }
            SlotSpec::Sum(types) if types.is_empty() => Err(Error::Parse("empty direct sum".into())),
            SlotSpec::Sum(types) if types.iter().any(|&l| l > MAX_TYPE) => {
                Err(Error::Parse(format!("a type in {types:?} exceeds the cap of {MAX_TYPE}")))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for SlotSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SlotSpec::Cartesian(r) => write!(f, "cart:{r}"),
            SlotSpec::Spherical(l) => write!(f, "sph:{l}"),
            SlotSpec::Sum(types) => {
                let parts: Vec<String> = types.iter().map(|l| l.to_string()).collect();
                write!(f, "sum:{}", parts.join("+"))
            }
        }
    }
}

fn parse_usize(s: &str, what: &str) -> Result<usize> {
    s.trim().parse().map_err(|_| Error::Parse(format!("expected a non-negative integer {what}, got {s:?}")))
}

impl FromStr for SlotSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, arg) = s
            .trim()
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("slot {s:?} is not of the form kind:arg")))?;
        let spec = match kind {
            "cart" => SlotSpec::Cartesian(parse_usize(arg, "rank")?),
            "sph" => SlotSpec::Spherical(parse_usize(arg, "type")?),
            "sum" => SlotSpec::Sum(arg.split('+').map(|p| parse_usize(p, "type")).collect::<Result<_>>()?),
            other => return Err(Error::Parse(format!("unknown slot kind {other:?}"))),
        };
        spec.check_caps()?;
        Ok(spec)
    }
}

/// Ordered list of input slots, written as e.g. `cart:1,cart:1,cart:2`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Signature {
    pub slots: Vec<SlotSpec>,
}

impl Signature {
    pub fn new(slots: Vec<SlotSpec>) -> Result<Self> {
        for s in &slots {
            s.check_caps()?;
        }
        Ok(Signature { slots })
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// This signature with one more slot appended.
    pub fn with_slot(&self, slot: SlotSpec) -> Self {
        let mut slots = self.slots.clone();
        slots.push(slot);
        Signature { slots }
    }

    pub fn random_bindings<R: Rng + ?Sized>(&self, rng: &mut R) -> Bindings {
        self.slots.iter().enumerate().map(|(i, s)| (i, s.random(rng))).collect()
    }

    /// Rotates every bound slot; unbound slots are skipped.
    pub fn act(&self, r: &Rotation, bind: &Bindings) -> Result<Bindings> {
        let mut out = Bindings::new();
        for (slot, t) in bind.iter() {
            let spec = self
                .slots
                .get(slot)
                .ok_or_else(|| Error::ShapeMismatch(format!("binding for unknown slot {slot}")))?;
            out.insert(slot, spec.act(r, t)?);
        }
        Ok(out)
    }

    pub fn check_bindings(&self, bind: &Bindings) -> Result<()> {
        for (i, spec) in self.slots.iter().enumerate() {
            let t = bind.get(i).ok_or(Error::MissingBinding(i))?;
            if t.shape() != spec.shape().as_slice() {
                return Err(Error::ShapeMismatch(format!(
                    "slot {i} ({spec}) expects {:?}, got {:?}",
                    spec.shape(),
                    t.shape()
                )));
            }
        }
        Ok(())
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.slots.iter().map(|s| s.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

impl FromStr for Signature {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim().is_empty() {
            return Err(Error::Parse("empty signature".into()));
        }
        Ok(Signature { slots: s.split(',').map(str::parse).collect::<Result<_>>()? })
    }
}

impl Serialize for Signature {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Signature {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl Serialize for SlotSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for SlotSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::so3::random_rotation;

    #[test]
    fn parse_and_display() {
        let sig: Signature = "cart:1,cart:1,cart:2".parse().unwrap();
        assert_eq!(sig.slots, vec![SlotSpec::Cartesian(1), SlotSpec::Cartesian(1), SlotSpec::Cartesian(2)]);
        assert_eq!(sig.to_string(), "cart:1,cart:1,cart:2");
        let sig: Signature = "sph:2,sum:1+3".parse().unwrap();
        assert_eq!(sig.slots[1], SlotSpec::Sum(vec![1, 3]));
        assert_eq!(sig.to_string(), "sph:2,sum:1+3");
    }

    #[test]
    fn parse_errors() {
        for bad in ["cart:x", "", "vec:1", "cart", "cart:5", "sph:9", "sum:", "sum:1+"] {
            assert!(matches!(bad.parse::<Signature>(), Err(Error::Parse(_))), "{bad}");
        }
    }

    #[test]
    fn sum_action_is_block_diagonal() {
        let spec = SlotSpec::Sum(vec![1, 2]);
        let r = random_rotation(9);
        let x = Tensor::vector(&[1.0, 2.0, 3.0, 0.5, -0.5, 0.0, 1.0, 2.0]);
        let y = spec.act(&r, &x).unwrap();
        let head = rotate_cartesian(&r, &Tensor::vector(&[1.0, 2.0, 3.0])).unwrap();
        for i in 0..3 {
            assert!((y.data()[i] - head.data()[i]).abs() < 1e-14);
        }
        assert!((y.norm() - x.norm()).abs() < 1e-12);
    }
}
