//! Port-Hamiltonian building blocks: structure matrices, storage functions
//! and the analytic energy rate of the converter plant.

use crate::ab::Ab;
use crate::error::{Error, Result};
use crate::plant::{self, PlantParams};
use crate::scalar::Real;

/// Dense row-major matrix, sized for the handful of states used here.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn from_rows(rows: &[&[T]]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension("ragged matrix rows".into()));
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data: rows.iter().flat_map(|r| r.iter().copied()).collect(),
        })
    }

    pub fn diagonal(diag: &[T]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (k, &d) in diag.iter().enumerate() {
            m[(k, k)] = d;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t[(c, r)] = self[(r, c)];
            }
        }
        t
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> T {
        (0..self.rows)
            .map(|r| (0..self.cols).map(|c| self[(r, c)].abs()).sum::<T>())
            .fold(T::zero(), T::max)
    }

    pub fn mul_vec(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.cols {
            return Err(Error::Dimension(format!(
                "{}x{} matrix applied to vector of length {}",
                self.rows,
                self.cols,
                x.len()
            )));
        }
        Ok((0..self.rows)
            .map(|r| (0..self.cols).map(|c| self[(r, c)] * x[c]).sum())
            .collect())
    }

    /// `xᵀ M x`.
    pub fn quadratic_form(&self, x: &[T]) -> Result<T> {
        let mx = self.mul_vec(x)?;
        Ok(mx.iter().zip(x).map(|(&a, &b)| a * b).sum())
    }

    fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// Eigenvalues of the symmetric part `(M + Mᵀ)/2`, ascending (cyclic Jacobi).
    pub fn symmetric_eigenvalues(&self) -> Result<Vec<T>> {
        if !self.is_square() {
            return Err(Error::Dimension(format!(
                "eigenvalues of a non-square {}x{} matrix",
                self.rows, self.cols
            )));
        }
        let n = self.rows;
        let half = T::lit(0.5);
        let mut a = self.zip_with(&self.transpose(), |x, y| (x + y) * half);
        for _sweep in 0..64 {
            let mut off = T::zero();
            for p in 0..n {
                for q in (p + 1)..n {
                    off += a[(p, q)] * a[(p, q)];
                }
            }
            if off <= T::epsilon() * T::epsilon() * (a.norm_inf() * a.norm_inf() + T::min_positive_value()) {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[(p, q)];
                    if apq == T::zero() {
                        continue;
                    }
                    let theta = (a[(q, q)] - a[(p, p)]) / (T::lit(2.0) * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                    let c = T::one() / (t * t + T::one()).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = c * akp - s * akq;
                        a[(k, q)] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = c * apk - s * aqk;
                        a[(q, k)] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut eig: Vec<T> = (0..n).map(|k| a[(k, k)]).collect();
        eig.sort_by(|x, y| x.partial_cmp(y).unwrap_or(core::cmp::Ordering::Equal));
        Ok(eig)
    }
}

impl<T> core::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (r, c): (usize, usize)) -> &T {
        &self.data[r * self.cols + c]
    }
}

impl<T> core::ops::IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut T {
        &mut self.data[r * self.cols + c]
    }
}

/// `ẋ = (J − R)∇H + G u`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhStructure<T> {
    pub j: Matrix<T>,
    pub r: Matrix<T>,
    pub g: Matrix<T>,
}

impl<T: Real> PhStructure<T> {
    pub fn new(j: Matrix<T>, r: Matrix<T>, g: Matrix<T>) -> Result<Self> {
        let n = j.rows();
        if !j.is_square() || r.rows() != n || r.cols() != n || g.rows() != n {
            return Err(Error::Dimension(format!(
                "J is {}x{}, R is {}x{}, G is {}x{}",
                j.rows(),
                j.cols(),
                r.rows(),
                r.cols(),
                g.rows(),
                g.cols()
            )));
        }
        Ok(Self { j, r, g })
    }

    pub fn dimension(&self) -> usize {
        self.j.rows()
    }

    pub fn inputs(&self) -> usize {
        self.g.cols()
    }

    /// Evaluates the state flow for a given gradient and input.
    pub fn flow(&self, grad: &[T], u: &[T]) -> Result<Vec<T>> {
        let jg = self.j.mul_vec(grad)?;
        let rg = self.r.mul_vec(grad)?;
        let gu = self.g.mul_vec(u)?;
        Ok((0..self.dimension())
            .map(|k| jg[k] - rg[k] + gu[k])
            .collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StructureReport<T> {
    /// `‖J + Jᵀ‖_∞`.
    pub skew_defect: T,
    /// Smallest eigenvalue of `(R + Rᵀ)/2`.
    pub min_eigenvalue: T,
    pub passes: bool,
}

/// Checks skew-symmetry of `J` and positive semidefiniteness of `R`.
/// `tol_psd` is relative to the respective matrix norm (floored at one).
pub fn validate_structure<T: Real>(s: &PhStructure<T>, tol_psd: T) -> Result<StructureReport<T>> {
    let skew_defect = s.j.zip_with(&s.j.transpose(), |a, b| a + b).norm_inf();
    let min_eigenvalue = s
        .r
        .symmetric_eigenvalues()?
        .first()
        .copied()
        .unwrap_or_else(T::zero);
    let j_scale = s.j.norm_inf().max(T::one());
    let r_scale = s.r.norm_inf().max(T::one());
    let passes = skew_defect <= tol_psd * j_scale && min_eigenvalue >= -tol_psd * r_scale;
    Ok(StructureReport {
        skew_defect,
        min_eigenvalue,
        passes,
    })
}

/// Structure of the plant storage block in coordinates `(φ_α, φ_β, q_dc)`
/// with inputs `(v_gα, v_gβ, e_α, e_β, i_conv − i_load)`.
pub fn plant_structure<T: Real>(p: &PlantParams<T>) -> Result<PhStructure<T>> {
    let (o, l) = (T::zero(), T::one());
    let r = p.r_tot();
    PhStructure::new(
        Matrix::zeros(3, 3),
        Matrix::diagonal(&[r, r, o]),
        Matrix::from_rows(&[&[l, o, -l, o, o], &[o, l, o, -l, o], &[o, o, o, o, l]])?,
    )
}

/// Plant storage plus the controller integrators.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EnergyState<T> {
    /// Flux of the lumped series inductor [V·s].
    pub phi: Ab<T>,
    /// DC-link charge [C].
    pub q_dc: T,
    pub zeta_v: T,
    pub zeta_i: Ab<T>,
}

impl<T: Real> EnergyState<T> {
    pub fn current(&self, p: &PlantParams<T>) -> Ab<T> {
        self.phi / p.l_tot()
    }

    pub fn v_dc(&self, p: &PlantParams<T>) -> T {
        self.q_dc / p.c_dc
    }

    pub fn is_finite(&self) -> bool {
        self.phi.is_finite() && self.q_dc.is_finite() && self.zeta_v.is_finite() && self.zeta_i.is_finite()
    }

    pub fn scaled(&self, k: T) -> Self {
        Self {
            phi: self.phi * k,
            q_dc: self.q_dc * k,
            zeta_v: self.zeta_v * k,
            zeta_i: self.zeta_i * k,
        }
    }
}

/// Weights of the controller storage `½ a_v ζ_v² + ½ m_i ‖ζ_i‖²`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StorageWeights<T> {
    pub a_v: T,
    pub m_i: T,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Hamiltonian<T> {
    /// Grid line plus filter inductor (reported jointly).
    pub line: T,
    pub dc: T,
    pub controller: T,
    pub total: T,
}

pub fn hamiltonian_total<T: Real>(
    x: &EnergyState<T>,
    p: &PlantParams<T>,
    w: &StorageWeights<T>,
) -> Result<Hamiltonian<T>> {
    p.validate()?;
    let half = T::lit(0.5);
    let line = half * x.phi.norm_sq() / p.l_tot();
    let dc = half * x.q_dc * x.q_dc / p.c_dc;
    let controller = half * (w.a_v * x.zeta_v * x.zeta_v + w.m_i * x.zeta_i.norm_sq());
    Ok(Hamiltonian {
        line,
        dc,
        controller,
        total: line + dc + controller,
    })
}

/// External inputs seen by the plant storage.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PortInputs<T> {
    pub v_g: Ab<T>,
    pub e: Ab<T>,
    pub p_load: T,
}

/// `Ḣ_tot = supply − R_g‖i‖² − R_f‖i‖² − converter loss − v_dc i_load`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EnergyRate<T> {
    pub supply: T,
    pub r_g_loss: T,
    pub r_f_loss: T,
    pub converter_loss: T,
    pub load_power: T,
    pub total: T,
}

pub fn energy_rate_analytic<T: Real>(
    x: &EnergyState<T>,
    inputs: &PortInputs<T>,
    p: &PlantParams<T>,
) -> Result<EnergyRate<T>> {
    p.validate()?;
    let v_dc = x.v_dc(p);
    if v_dc < p.v_dc_min {
        return Err(Error::Singularity {
            v_dc: v_dc.as_f64(),
            guard: p.v_dc_min.as_f64(),
        });
    }
    let i = x.current(p);
    let port = plant::converter_dc_current(inputs.e, i, v_dc, p.eta, p.v_dc_min)?;
    let load = plant::cpl_current(inputs.p_load, v_dc, p.v_dc_min)?;
    let supply = inputs.v_g.dot(i);
    let r_g_loss = p.r_g * i.norm_sq();
    let r_f_loss = p.r_f * i.norm_sq();
    let load_power = v_dc * load.current;
    Ok(EnergyRate {
        supply,
        r_g_loss,
        r_f_loss,
        converter_loss: port.loss,
        load_power,
        total: supply - r_g_loss - r_f_loss - port.loss - load_power,
    })
}
