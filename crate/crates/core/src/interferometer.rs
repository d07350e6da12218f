//! Optical elements of the Mach–Zehnder interferometer and the single-pass
//! transfer operators they produce.
//!
//! The closed forms (`single_pass_*`, `scheme2_*`) and the element-by-element
//! construction in [`ElementSet`] are two independent routes to the same
//! operators; [`compose_first_pass`] and [`compose_return_pass`] take the
//! second route.
//!
//! Path labels in the joint space: index 0/1 is a/b at the input, 1/2 inside
//! the arms, c/d at the output. Angles are radians.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use crate::kernel::{ComplexAmp, JointOperator, JointVector, PolOperator, PolVector, I, ONE};

pub const PORT_A: usize = 0;
pub const PORT_B: usize = 1;
pub const ARM_1: usize = 0;
pub const ARM_2: usize = 1;
pub const PORT_C: usize = 0;
pub const PORT_D: usize = 1;

/// e^{iθσx} = cos θ·I + i sin θ·σx
pub fn faraday_unitary(theta_rad: f64) -> PolOperator {
    let (s, c) = theta_rad.sin_cos();
    PolOperator::identity().scale(ONE * c) + PolOperator::sigma_x().scale(I * s)
}

/// M̂₋ = (e^{iθσx} − e^{iβ})/2, the dark-port operator of one pass.
pub fn single_pass_dark(theta_rad: f64, beta_rad: f64) -> PolOperator {
    (faraday_unitary(theta_rad) - PolOperator::scalar(Complex64::cis(beta_rad))).scale(ONE * 0.5)
}

/// M₊ = (cos θ + e^{iβ})/2, the bright-port amplitude after the H filter.
pub fn single_pass_bright(theta_rad: f64, beta_rad: f64) -> ComplexAmp {
    (Complex64::cis(beta_rad) + theta_rad.cos()) * 0.5
}

/// Q̂₋ = (cos θ·e^{iθσx} − e^{2iβ})/2, the dark-port operator for light
/// returned through the arms in the internal recycling loop.
pub fn scheme2_dark(theta_rad: f64, beta_rad: f64) -> PolOperator {
    let c = theta_rad.cos();
    (faraday_unitary(theta_rad).scale(ONE * c)
        - PolOperator::scalar(Complex64::cis(2.0 * beta_rad)))
    .scale(ONE * 0.5)
}

/// Q₊ = (cos²θ + e^{2iβ})/2
pub fn scheme2_bright(theta_rad: f64, beta_rad: f64) -> ComplexAmp {
    let c = theta_rad.cos();
    (Complex64::cis(2.0 * beta_rad) + c * c) * 0.5
}

/// The elements of the interferometer as operators on path ⊗ polarization.
#[derive(Clone, Copy, Debug)]
pub struct ElementSet {
    /// BS1: |a⟩ → (|1⟩+|2⟩)/√2, |b⟩ → (|1⟩−|2⟩)/√2
    pub s1: JointOperator,
    /// BS2: |1⟩ → (|c⟩+|d⟩)/√2, |2⟩ → (|c⟩−|d⟩)/√2
    pub s2: JointOperator,
    /// Faraday rotation on arm 1.
    pub u1: JointOperator,
    /// Postselection phase on arm 2.
    pub u2: JointOperator,
    pub m_c: JointOperator,
    pub m_d: JointOperator,
    /// |H⟩⟨H| on polarization.
    pub m_h: JointOperator,
    /// H filter on arm 1 only (the internal loop's first polarizer).
    pub hp_arm1: JointOperator,
}

impl ElementSet {
    pub fn new(theta_rad: f64, beta_rad: f64) -> Self {
        let h = ONE * FRAC_1_SQRT_2;
        let splitter = [[h, h], [h, -h]];
        let id = PolOperator::identity();
        ElementSet {
            s1: JointOperator::kron(&splitter, &id),
            s2: JointOperator::kron(&splitter, &id),
            u1: JointOperator::path_diagonal([faraday_unitary(theta_rad), id]),
            u2: JointOperator::path_diagonal([id, PolOperator::scalar(Complex64::cis(beta_rad))]),
            m_c: JointOperator::path_projector(PORT_C),
            m_d: JointOperator::path_projector(PORT_D),
            m_h: JointOperator::polarization(&PolOperator::project_h()),
            hp_arm1: JointOperator::path_diagonal([PolOperator::project_h(), id]),
        }
    }

    /// S₂Û₂Û₁S₁: input ports (a, b) to output ports (c, d).
    pub fn forward_pass(&self) -> JointOperator {
        self.s2 * self.u2 * self.u1 * self.s1
    }

    /// Light sent back from port c through the arms to ports (a, b):
    /// S₁† · HP(arm 1) · Û₁ · Û₂ · S₂†. The arm-1 polarizer sits upstream of
    /// the Faraday crystal for forward light, so it only filters on return.
    pub fn return_pass(&self) -> JointOperator {
        self.s1.adjoint() * self.hp_arm1 * self.u1 * self.u2 * self.s2.adjoint()
    }

    pub fn elements_unitary(&self, tol: f64) -> bool {
        [self.s1, self.s2, self.u1, self.u2]
            .iter()
            .all(|u| u.is_unitary(tol))
    }

    pub fn projectors_valid(&self, tol: f64) -> bool {
        [self.m_c, self.m_d, self.m_h, self.hp_arm1]
            .iter()
            .all(|p| p.is_projector(tol))
    }
}

/// Builds M̂_d S₂Û₂Û₁S₁ and M̂_H M̂_c S₂Û₂Û₁S₁ element by element and reads
/// off the polarization operator on port d and the scalar H amplitude on
/// port c for light entering at port a.
pub fn compose_first_pass(theta_rad: f64, beta_rad: f64) -> (PolOperator, ComplexAmp) {
    let el = ElementSet::new(theta_rad, beta_rad);
    let f = el.forward_pass();
    let dark = el.m_d * f;
    let bright = el.m_h * el.m_c * f;

    let dark_h = dark
        .apply(&JointVector::product(PORT_A, PolVector::H))
        .on_path(PORT_D);
    let dark_v = dark
        .apply(&JointVector::product(PORT_A, PolVector::V))
        .on_path(PORT_D);
    let dark_op = PolOperator::new([[dark_h.h, dark_v.h], [dark_h.v, dark_v.v]]);

    let bright_h = bright
        .apply(&JointVector::product(PORT_A, PolVector::H))
        .on_path(PORT_C);
    (dark_op, bright_h.h)
}

/// One internal-loop round for unit H amplitude leaving port c: the state
/// |Ψ(θ)⟩ on (a, b), then the dark-port vector Q̂₋|H⟩ and bright amplitude Q₊.
pub fn compose_return_pass(theta_rad: f64, beta_rad: f64) -> (JointVector, PolVector, ComplexAmp) {
    let el = ElementSet::new(theta_rad, beta_rad);
    let returned = el
        .return_pass()
        .apply(&JointVector::product(PORT_C, PolVector::H));
    let out = el.forward_pass().apply(&returned);
    (returned, out.on_path(PORT_D), out.on_path(PORT_C).h)
}
