// SPDX-License-Identifier: Apache-2.0

//! Static IR drop on a single-layer resistive mesh.
//!
//! Pads hold the nominal supply. Every other node sinks the current of the
//! instances placed nearest to it. The solver works on droops `d = vdd - v`
//! so that `G d = i` with `G` the mesh Laplacian restricted to non-pad
//! nodes. Units: mV, mA, Ω.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::{round, sqrt};
use crate::netlist::{InstId, NetlistGraph};
use crate::power::PowerReport;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IrError {
    #[error("instance {inst} at ({x}, {y}) lies outside the {rows}x{cols} mesh")]
    OutOfRange { inst: usize, x: f64, y: f64, rows: usize, cols: usize },
    #[error("mesh needs at least one pad node")]
    NoPads,
    #[error("pad ({0}, {1}) outside the mesh")]
    BadPad(usize, usize),
    #[error("conjugate gradient did not converge in {iterations} iterations (relative residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("target droop unreachable: mesh draws no current")]
    ZeroCurrent,
    #[error("target droop must be positive, got {0}")]
    BadTarget(f64),
}

/// Rail voltage per instance, in mV.
#[derive(Debug, Clone, PartialEq)]
pub struct VoltageMap {
    volts: Vec<f64>,
}

impl VoltageMap {
    pub fn uniform(n: usize, mv: f64) -> Self {
        Self { volts: vec![mv; n] }
    }

    pub fn from_vec(volts: Vec<f64>) -> Self {
        Self { volts }
    }

    #[inline]
    pub fn get(&self, id: InstId) -> f64 {
        self.volts[id.index()]
    }

    pub fn len(&self) -> usize {
        self.volts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.volts.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.volts
    }

    pub fn worst_droop(&self, nominal_mv: f64) -> f64 {
        self.volts.iter().map(|v| nominal_mv - v).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Pads {
    Corners,
    Nodes(Vec<(usize, usize)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeshConfig {
    pub rows: usize,
    pub cols: usize,
    /// Resistance of one mesh segment, Ω.
    pub sheet_resistance: f64,
    pub pads: Pads,
    /// Placement units between adjacent mesh nodes.
    pub pitch: f64,
}

impl MeshConfig {
    /// Mesh covering placements in `[0, extent]²`, one node per `pitch`.
    pub fn covering(extent: f64, pitch: f64, sheet_resistance: f64) -> Self {
        let n = libm::ceil(extent / pitch) as usize + 1;
        Self { rows: n, cols: n, sheet_resistance, pads: Pads::Corners, pitch }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdnMesh {
    pub rows: usize,
    pub cols: usize,
    pub sheet_resistance: f64,
    pub vdd_mv: f64,
    /// Node indices (`row * cols + col`) pinned to `vdd_mv`.
    pub pads: Vec<usize>,
    /// Current drawn at each node, mA.
    pub currents: Vec<f64>,
    /// Mesh node of each instance.
    pub inst_node: Vec<usize>,
}

impl PdnMesh {
    pub fn new(rows: usize, cols: usize, sheet_resistance: f64, vdd_mv: f64, pads: &Pads) -> Result<Self, IrError> {
        let pads = match pads {
            Pads::Corners => {
                let mut p = vec![0, cols - 1, (rows - 1) * cols, rows * cols - 1];
                p.sort_unstable();
                p.dedup();
                p
            }
            Pads::Nodes(list) => {
                let mut p = Vec::with_capacity(list.len());
                for &(r, c) in list {
                    if r >= rows || c >= cols {
                        return Err(IrError::BadPad(r, c));
                    }
                    p.push(r * cols + c);
                }
                p.sort_unstable();
                p.dedup();
                p
            }
        };
        if pads.is_empty() {
            return Err(IrError::NoPads);
        }
        Ok(Self { rows, cols, sheet_resistance, vdd_mv, pads, currents: vec![0.0; rows * cols], inst_node: Vec::new() })
    }

    pub fn num_nodes(&self) -> usize {
        self.rows * self.cols
    }

    fn neighbors(&self, k: usize) -> impl Iterator<Item = usize> {
        let (r, c, rows, cols) = (k / self.cols, k % self.cols, self.rows, self.cols);
        let up = (r > 0).then(|| k - cols);
        let down = (r + 1 < rows).then(|| k + cols);
        let left = (c > 0).then(|| k - 1);
        let right = (c + 1 < cols).then(|| k + 1);
        [up, down, left, right].into_iter().flatten()
    }

    /// Reduced system over non-pad nodes: `(free node list, CSR matrix, rhs)`.
    pub fn reduced_system(&self) -> (Vec<usize>, Csr, Vec<f64>) {
        let n = self.num_nodes();
        let mut is_pad = vec![false; n];
        for &p in &self.pads {
            is_pad[p] = true;
        }
        let mut slot = vec![usize::MAX; n];
        let mut free = Vec::new();
        for k in 0..n {
            if !is_pad[k] {
                slot[k] = free.len();
                free.push(k);
            }
        }
        let gseg = 1.0 / self.sheet_resistance;
        let mut csr = Csr { row_ptr: vec![0], cols: Vec::new(), vals: Vec::new() };
        for &k in &free {
            let mut diag = 0.0;
            let mut off: Vec<(usize, f64)> = Vec::with_capacity(4);
            for j in self.neighbors(k) {
                diag += gseg;
                if !is_pad[j] {
                    off.push((slot[j], -gseg));
                }
            }
            off.push((slot[k], diag));
            off.sort_unstable_by_key(|e| e.0);
            for (c, v) in off {
                csr.cols.push(c);
                csr.vals.push(v);
            }
            csr.row_ptr.push(csr.cols.len());
        }
        let rhs = free.iter().map(|&k| self.currents[k]).collect();
        (free, csr, rhs)
    }

    fn expand(&self, free: &[usize], droop: &[f64]) -> Vec<f64> {
        let mut v = vec![self.vdd_mv; self.num_nodes()];
        for (&k, d) in free.iter().zip(droop) {
            v[k] = self.vdd_mv - d;
        }
        v
    }

    /// Node voltages by preconditioned conjugate gradient.
    pub fn solve_nodes(&self) -> Result<Vec<f64>, IrError> {
        let (free, a, b) = self.reduced_system();
        let d = pcg(&a, &b, 1e-10)?;
        Ok(self.expand(&free, &d))
    }

    /// Node voltages by dense Cholesky factorization.
    pub fn solve_nodes_dense(&self) -> Result<Vec<f64>, IrError> {
        let (free, a, b) = self.reduced_system();
        let d = dense_cholesky_solve(&a.to_dense(), &b)?;
        Ok(self.expand(&free, &d))
    }

    pub fn instance_voltages(&self, node_volts: &[f64]) -> VoltageMap {
        VoltageMap::from_vec(self.inst_node.iter().map(|&k| node_volts[k]).collect())
    }
}

/// Compressed sparse rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Csr {
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl Csr {
    pub fn dim(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            *yi = s;
        }
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|i| {
                (self.row_ptr[i]..self.row_ptr[i + 1]).find(|&k| self.cols[k] == i).map_or(0.0, |k| self.vals[k])
            })
            .collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut m = vec![vec![0.0; n]; n];
        for (i, row) in m.iter_mut().enumerate() {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                row[self.cols[k]] = self.vals[k];
            }
        }
        m
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Jacobi-preconditioned conjugate gradient. Stops once the residual is
/// below `rel_tol` relative in the 2-norm and below `10 * rel_tol`
/// relative in the max-norm.
pub fn pcg(a: &Csr, b: &[f64], rel_tol: f64) -> Result<Vec<f64>, IrError> {
    let n = a.dim();
    let mut x = vec![0.0; n];
    let bnorm = sqrt(dot(b, b));
    let binf = inf_norm(b);
    if bnorm == 0.0 {
        return Ok(x);
    }
    let inv_diag: Vec<f64> = a.diag().iter().map(|d| 1.0 / d).collect();
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let cap = 10 * n + 100;
    for _ in 0..cap {
        a.matvec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(IrError::NotPositiveDefinite);
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if sqrt(dot(&r, &r)) <= rel_tol * bnorm && inf_norm(&r) <= 10.0 * rel_tol * binf {
            return Ok(x);
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(IrError::NoConvergence { iterations: cap, residual: sqrt(dot(&r, &r)) / bnorm })
}

/// Solves `m x = b` for symmetric positive definite `m`.
pub fn dense_cholesky_solve(m: &[Vec<f64>], b: &[f64]) -> Result<Vec<f64>, IrError> {
    let n = b.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let d = m[i][i] - s;
                if d <= 0.0 {
                    return Err(IrError::NotPositiveDefinite);
                }
                l[i][i] = sqrt(d);
            } else {
                l[i][j] = (m[i][j] - s) / l[j][j];
            }
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        let s: f64 = (0..i).map(|k| l[i][k] * y[k]).sum();
        y[i] = (b[i] - s) / l[i][i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| l[k][i] * x[k]).sum();
        x[i] = (y[i] - s) / l[i][i];
    }
    Ok(x)
}

/// Maps every instance to its nearest mesh node and sinks
/// `total_power / vdd` there.
pub fn build_mesh(g: &NetlistGraph, power: &PowerReport, vdd_mv: f64, cfg: &MeshConfig) -> Result<PdnMesh, IrError> {
    let mut mesh = PdnMesh::new(cfg.rows, cfg.cols, cfg.sheet_resistance, vdd_mv, &cfg.pads)?;
    mesh.inst_node.reserve(g.num_instances());
    for id in g.ids() {
        let (x, y) = g.instance(id).location;
        let c = round(x / cfg.pitch);
        let r = round(y / cfg.pitch);
        if !(c >= 0.0 && r >= 0.0 && (c as usize) < cfg.cols && (r as usize) < cfg.rows) {
            return Err(IrError::OutOfRange { inst: id.index(), x, y, rows: cfg.rows, cols: cfg.cols });
        }
        let k = r as usize * cfg.cols + c as usize;
        mesh.currents[k] += power.total[id.index()] / vdd_mv;
        mesh.inst_node.push(k);
    }
    Ok(mesh)
}

pub fn solve_ir(mesh: &PdnMesh) -> Result<VoltageMap, IrError> {
    Ok(mesh.instance_voltages(&mesh.solve_nodes()?))
}

/// Rescales the segment resistance so the worst node droop equals `target_mv`.
pub fn scale_mesh_to_target(mesh: &PdnMesh, target_mv: f64) -> Result<PdnMesh, IrError> {
    if !(target_mv > 0.0) {
        return Err(IrError::BadTarget(target_mv));
    }
    let worst = mesh.solve_nodes()?.iter().map(|v| mesh.vdd_mv - v).fold(0.0, f64::max);
    if worst <= 0.0 {
        return Err(IrError::ZeroCurrent);
    }
    let mut out = mesh.clone();
    out.sheet_resistance *= target_mv / worst;
    Ok(out)
}
