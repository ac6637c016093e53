//! secp256k1 group arithmetic over `BigUint`.
//!
//! Points are kept in Jacobian coordinates internally and only converted to
//! affine form at the edges. Nothing here is constant time: the code signs
//! simulation certificates, not real funds.

use std::sync::LazyLock;

use num_bigint::BigUint;
use num_traits::{One, Zero};

pub(crate) struct CurveParams {
    /// Field prime 2^256 - 2^32 - 977.
    pub p: BigUint,
    /// Group order.
    pub n: BigUint,
    /// floor(n / 2), upper bound of the canonical low-s range.
    pub half_n: BigUint,
    pub b: BigUint,
    pub g: AffinePoint,
    /// (p + 1) / 4, valid square-root exponent since p = 3 mod 4.
    sqrt_exp: BigUint,
}

fn hex_uint(s: &str) -> BigUint {
    BigUint::parse_bytes(s.as_bytes(), 16).expect("curve constant")
}

pub(crate) static CURVE: LazyLock<CurveParams> = LazyLock::new(|| {
    let p = hex_uint("FFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEFFFFFC2F");
    let n = hex_uint("FFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEBAAEDCE6AF48A03BBFD25E8CD0364141");
    let g = AffinePoint {
        x: hex_uint("79BE667EF9DCBBAC55A06295CE870B07029BFCDB2DCE28D959F2815B16F81798"),
        y: hex_uint("483ADA7726A3C4655DA4FBFC0E1108A8FD17B448A68554199C47D08FFB10D4B8"),
    };
    let sqrt_exp = (&p + 1u32) >> 2;
    CurveParams { half_n: &n >> 1, b: BigUint::from(7u32), sqrt_exp, p, n, g }
});

/// Precomputed multiples `j * 16^i * G` for i in 0..64, j in 0..16.
static BASE_TABLE: LazyLock<Vec<[JacobianPoint; 16]>> = LazyLock::new(|| {
    let mut table = Vec::with_capacity(64);
    let mut unit = JacobianPoint::from_affine(&CURVE.g);
    for _ in 0..64 {
        let mut row: [JacobianPoint; 16] = std::array::from_fn(|_| JacobianPoint::infinity());
        for j in 1..16 {
            row[j] = row[j - 1].add(&unit);
        }
        unit = row[15].add(&unit);
        table.push(row);
    }
    table
});

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffinePoint {
    pub x: BigUint,
    pub y: BigUint,
}

impl AffinePoint {
    /// Checks y^2 = x^3 + 7 (mod p) with both coordinates reduced.
    pub fn is_on_curve(&self) -> bool {
        let c = &*CURVE;
        if self.x >= c.p || self.y >= c.p {
            return false;
        }
        fe_sqr(&self.y) == curve_rhs(&self.x)
    }

    pub fn to_compressed(&self) -> [u8; 33] {
        let mut out = [0u8; 33];
        out[0] = if self.y.bit(0) { 0x03 } else { 0x02 };
        out[1..].copy_from_slice(&to_be32(&self.x));
        out
    }

    pub fn from_compressed(bytes: &[u8; 33]) -> Option<AffinePoint> {
        let c = &*CURVE;
        let odd = match bytes[0] {
            0x02 => false,
            0x03 => true,
            _ => return None,
        };
        let x = BigUint::from_bytes_be(&bytes[1..]);
        if x >= c.p {
            return None;
        }
        let rhs = curve_rhs(&x);
        let mut y = rhs.modpow(&c.sqrt_exp, &c.p);
        if fe_sqr(&y) != rhs {
            return None;
        }
        if y.bit(0) != odd {
            y = &c.p - &y;
        }
        Some(AffinePoint { x, y })
    }
}

fn curve_rhs(x: &BigUint) -> BigUint {
    fe_add(&fe_mul(&fe_sqr(x), x), &CURVE.b)
}

pub(crate) fn to_be32(v: &BigUint) -> [u8; 32] {
    let bytes = v.to_bytes_be();
    debug_assert!(bytes.len() <= 32);
    let mut out = [0u8; 32];
    out[32 - bytes.len()..].copy_from_slice(&bytes);
    out
}

fn fe_add(a: &BigUint, b: &BigUint) -> BigUint {
    let s = a + b;
    if s >= CURVE.p {
        s - &CURVE.p
    } else {
        s
    }
}

fn fe_sub(a: &BigUint, b: &BigUint) -> BigUint {
    if a >= b {
        a - b
    } else {
        &CURVE.p - b + a
    }
}

fn fe_mul(a: &BigUint, b: &BigUint) -> BigUint {
    (a * b) % &CURVE.p
}

fn fe_sqr(a: &BigUint) -> BigUint {
    fe_mul(a, a)
}

fn fe_small(a: &BigUint, k: u32) -> BigUint {
    (a * k) % &CURVE.p
}

fn fe_inv(a: &BigUint) -> BigUint {
    a.modpow(&(&CURVE.p - 2u32), &CURVE.p)
}

#[derive(Clone, Debug)]
pub(crate) struct JacobianPoint {
    x: BigUint,
    y: BigUint,
    z: BigUint,
}

impl JacobianPoint {
    pub fn infinity() -> Self {
        JacobianPoint { x: BigUint::one(), y: BigUint::one(), z: BigUint::zero() }
    }

    pub fn from_affine(p: &AffinePoint) -> Self {
        JacobianPoint { x: p.x.clone(), y: p.y.clone(), z: BigUint::one() }
    }

    pub fn is_infinity(&self) -> bool {
        self.z.is_zero()
    }

    pub fn to_affine(&self) -> Option<AffinePoint> {
        if self.is_infinity() {
            return None;
        }
        let zinv = fe_inv(&self.z);
        let zinv2 = fe_sqr(&zinv);
        let x = fe_mul(&self.x, &zinv2);
        let y = fe_mul(&self.y, &fe_mul(&zinv2, &zinv));
        Some(AffinePoint { x, y })
    }

    pub fn double(&self) -> Self {
        if self.is_infinity() || self.y.is_zero() {
            return Self::infinity();
        }
        // dbl-2009-l, a = 0
        let a = fe_sqr(&self.x);
        let b = fe_sqr(&self.y);
        let c = fe_sqr(&b);
        let xb = fe_add(&self.x, &b);
        let d = fe_small(&fe_sub(&fe_sub(&fe_sqr(&xb), &a), &c), 2);
        let e = fe_small(&a, 3);
        let f = fe_sqr(&e);
        let x3 = fe_sub(&f, &fe_small(&d, 2));
        let y3 = fe_sub(&fe_mul(&e, &fe_sub(&d, &x3)), &fe_small(&c, 8));
        let z3 = fe_small(&fe_mul(&self.y, &self.z), 2);
        JacobianPoint { x: x3, y: y3, z: z3 }
    }

    pub fn add(&self, other: &Self) -> Self {
        if self.is_infinity() {
            return other.clone();
        }
        if other.is_infinity() {
            return self.clone();
        }
        let z1z1 = fe_sqr(&self.z);
        let z2z2 = fe_sqr(&other.z);
        let u1 = fe_mul(&self.x, &z2z2);
        let u2 = fe_mul(&other.x, &z1z1);
        let s1 = fe_mul(&self.y, &fe_mul(&other.z, &z2z2));
        let s2 = fe_mul(&other.y, &fe_mul(&self.z, &z1z1));
        let h = fe_sub(&u2, &u1);
        let r = fe_sub(&s2, &s1);
        if h.is_zero() {
            return if r.is_zero() { self.double() } else { Self::infinity() };
        }
        let hh = fe_sqr(&h);
        let hhh = fe_mul(&h, &hh);
        let v = fe_mul(&u1, &hh);
        let x3 = fe_sub(&fe_sub(&fe_sqr(&r), &hhh), &fe_small(&v, 2));
        let y3 = fe_sub(&fe_mul(&r, &fe_sub(&v, &x3)), &fe_mul(&s1, &hhh));
        let z3 = fe_mul(&fe_mul(&self.z, &other.z), &h);
        JacobianPoint { x: x3, y: y3, z: z3 }
    }

    /// `k * self` with a 4-bit fixed window.
    pub fn mul(&self, k: &BigUint) -> Self {
        let mut table: [JacobianPoint; 16] = std::array::from_fn(|_| Self::infinity());
        for j in 1..16 {
            table[j] = table[j - 1].add(self);
        }
        let mut acc = Self::infinity();
        for byte in to_be32(k) {
            for nibble in [byte >> 4, byte & 0x0f] {
                acc = acc.double().double().double().double();
                if nibble != 0 {
                    acc = acc.add(&table[nibble as usize]);
                }
            }
        }
        acc
    }
}

/// `k * G` using the precomputed base table.
pub(crate) fn mul_base(k: &BigUint) -> JacobianPoint {
    let table = &*BASE_TABLE;
    let bytes = to_be32(k);
    let mut acc = JacobianPoint::infinity();
    for (i, row) in table.iter().enumerate() {
        let byte = bytes[31 - i / 2];
        let nibble = if i % 2 == 0 { byte & 0x0f } else { byte >> 4 };
        if nibble != 0 {
            acc = acc.add(&row[nibble as usize]);
        }
    }
    acc
}

/// `a * G + b * P`.
pub(crate) fn mul_base_add(a: &BigUint, b: &BigUint, point: &AffinePoint) -> JacobianPoint {
    mul_base(a).add(&JacobianPoint::from_affine(point).mul(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_is_on_curve() {
        assert!(CURVE.g.is_on_curve());
    }

    #[test]
    fn order_times_generator_is_infinity() {
        assert!(mul_base(&CURVE.n).is_infinity());
        let g = JacobianPoint::from_affine(&CURVE.g);
        assert!(g.mul(&CURVE.n).is_infinity());
    }

    #[test]
    fn base_table_matches_generic_multiplication() {
        let g = JacobianPoint::from_affine(&CURVE.g);
        for k in [1u64, 2, 3, 15, 16, 17, 255, 256, 0xdead_beef_cafe] {
            let k = BigUint::from(k);
            assert_eq!(mul_base(&k).to_affine(), g.mul(&k).to_affine(), "k = {k}");
        }
    }

    #[test]
    fn two_g_known_value() {
        // 2G from the standard secp256k1 tables.
        let two_g = mul_base(&BigUint::from(2u32)).to_affine().unwrap();
        assert_eq!(to_be32(&two_g.x), hex_literal("C6047F9441ED7D6D3045406E95C07CD85C778E4B8CEF3CA7ABAC09B95C709EE5"));
        assert_eq!(to_be32(&two_g.y), hex_literal("1AE168FEA63DC339A3C58419466CEAEEF7F632653266D0E1236431A950CFE52A"));
    }

    #[test]
    fn compressed_round_trip() {
        for k in 1u32..20 {
            let p = mul_base(&BigUint::from(k)).to_affine().unwrap();
            assert!(p.is_on_curve());
            let c = p.to_compressed();
            assert_eq!(AffinePoint::from_compressed(&c).unwrap(), p);
        }
    }

    #[test]
    fn rejects_invalid_encodings() {
        let mut bad = CURVE.g.to_compressed();
        bad[0] = 0x04;
        assert!(AffinePoint::from_compressed(&bad).is_none());
        // x = 5 gives x^3 + 7 = 132, a non-residue mod p.
        let mut nonresidue = [0u8; 33];
        nonresidue[0] = 0x02;
        nonresidue[32] = 5;
        assert!(AffinePoint::from_compressed(&nonresidue).is_none());
    }

    fn hex_literal(s: &str) -> [u8; 32] {
        let mut out = [0u8; 32];
        hex::decode_to_slice(s, &mut out).unwrap();
        out
    }
}
