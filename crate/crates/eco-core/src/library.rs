// SPDX-License-Identifier: Apache-2.0

//! Standard-cell library model and NLDM-style table lookup.
//!
//! A library is a set of sized variants grouped by logical class. Every
//! variant has one output pin and one timing arc per input pin; each arc
//! carries a delay table and an output-slew table on a shared
//! (input slew × output load) grid.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

/// Index of a cell class inside a [`CellLibrary`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClassId(pub u32);

impl ClassId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LibraryError {
    #[error("cell {cell}: {rule}")]
    Invariant { cell: String, rule: String },
    #[error("cell {cell}: no arc {from} -> {to}")]
    UnknownArc { cell: String, from: String, to: String },
    #[error("unknown cell {class} size {size}")]
    UnknownCell { class: String, size: usize },
    #[error("library: {0}")]
    Library(String),
}

/// Two-dimensional lookup table indexed by input slew (rows) and output
/// load (columns). Values are row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Table2d {
    pub slew_axis: Vec<f64>,
    pub load_axis: Vec<f64>,
    pub values: Vec<f64>,
}

/// Locates `x` on a strictly increasing axis, clamped to the axis range.
/// Returns the lower knot index and the interpolation weight in [0, 1].
fn locate(axis: &[f64], x: f64) -> (usize, f64) {
    let n = axis.len();
    if n == 1 || x <= axis[0] {
        return (0, 0.0);
    }
    if x >= axis[n - 1] {
        return (n - 2, 1.0);
    }
    // first knot strictly greater than x
    let hi = axis.partition_point(|&a| a <= x);
    let lo = hi - 1;
    let t = (x - axis[lo]) / (axis[hi] - axis[lo]);
    (lo, t)
}

impl Table2d {
    pub fn new(slew_axis: Vec<f64>, load_axis: Vec<f64>, values: Vec<f64>) -> Self {
        Self { slew_axis, load_axis, values }
    }

    pub fn rows(&self) -> usize {
        self.slew_axis.len()
    }

    pub fn cols(&self) -> usize {
        self.load_axis.len()
    }

    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols() + col]
    }

    /// Bilinear interpolation; queries outside the grid clamp to the
    /// boundary.
    pub fn lookup(&self, slew: f64, load: f64) -> f64 {
        let cols = self.cols();
        let (r, tr) = locate(&self.slew_axis, slew);
        let (c, tc) = locate(&self.load_axis, load);
        if self.rows() == 1 && cols == 1 {
            return self.values[0];
        }
        let r1 = if self.rows() == 1 { r } else { r + 1 };
        let c1 = if cols == 1 { c } else { c + 1 };
        let v00 = self.values[r * cols + c];
        let v01 = self.values[r * cols + c1];
        let v10 = self.values[r1 * cols + c];
        let v11 = self.values[r1 * cols + c1];
        let top = v00 + (v01 - v00) * tc;
        let bottom = v10 + (v11 - v10) * tc;
        top + (bottom - top) * tr
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InputPin {
    pub name: String,
    pub cap_ff: f64,
}

/// Input-pin to output-pin arc. `delay` and `out_slew` share the axes.
#[derive(Debug, Clone, PartialEq)]
pub struct TimingArc {
    pub from_pin: String,
    pub to_pin: String,
    pub delay: Table2d,
    pub out_slew: Table2d,
}

impl TimingArc {
    /// Returns `(delay_ps, out_slew_ps)` at the given point.
    #[inline]
    pub fn eval(&self, in_slew: f64, load: f64) -> (f64, f64) {
        (self.delay.lookup(in_slew, load), self.out_slew.lookup(in_slew, load))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellVariant {
    pub cell_class: String,
    pub size_index: usize,
    pub input_pins: Vec<InputPin>,
    pub output_pin: String,
    /// `arcs[p]` is the arc from `input_pins[p]` to the output pin.
    pub arcs: Vec<TimingArc>,
    pub leakage_uw: f64,
    pub internal_energy_fj: f64,
    /// Fractional delay increase per mV of supply droop.
    pub voltage_sensitivity_per_mv: f64,
    pub area: f64,
}

impl CellVariant {
    pub fn name(&self) -> String {
        format!("{}_X{}", self.cell_class, self.size_index)
    }

    pub fn pin_cap(&self, pin: usize) -> f64 {
        self.input_pins[pin].cap_ff
    }

    /// NLDM lookup on the arc `from -> to`.
    pub fn lookup_delay(
        &self,
        from: &str,
        to: &str,
        in_slew: f64,
        load: f64,
    ) -> Result<(f64, f64), LibraryError> {
        self.arcs
            .iter()
            .find(|a| a.from_pin == from && a.to_pin == to)
            .map(|a| a.eval(in_slew, load))
            .ok_or_else(|| LibraryError::UnknownArc {
                cell: self.name(),
                from: from.to_string(),
                to: to.to_string(),
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellClass {
    pub name: String,
    /// Variant indices ordered by size.
    pub variants: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellLibrary {
    pub name: String,
    pub nominal_vdd_mv: f64,
    pub variants: Vec<CellVariant>,
    pub classes: Vec<CellClass>,
    class_index: BTreeMap<String, ClassId>,
}

impl CellLibrary {
    /// Groups `variants` into classes and validates every invariant.
    pub fn new(
        name: impl Into<String>,
        nominal_vdd_mv: f64,
        variants: Vec<CellVariant>,
    ) -> Result<Self, LibraryError> {
        let mut class_index: BTreeMap<String, ClassId> = BTreeMap::new();
        let mut classes: Vec<CellClass> = Vec::new();
        for (vi, v) in variants.iter().enumerate() {
            let id = *class_index.entry(v.cell_class.clone()).or_insert_with(|| {
                classes.push(CellClass { name: v.cell_class.clone(), variants: Vec::new() });
                ClassId((classes.len() - 1) as u32)
            });
            classes[id.index()].variants.push(vi);
        }
        for class in &mut classes {
            class.variants.sort_by_key(|&vi| variants[vi].size_index);
        }
        let lib = Self { name: name.into(), nominal_vdd_mv, variants, classes, class_index };
        lib.validate()?;
        Ok(lib)
    }

    pub fn class_id(&self, class: &str) -> Option<ClassId> {
        self.class_index.get(class).copied()
    }

    pub fn class_name(&self, class: ClassId) -> &str {
        &self.classes[class.index()].name
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn num_sizes(&self, class: ClassId) -> usize {
        self.classes[class.index()].variants.len()
    }

    pub fn max_sizes(&self) -> usize {
        self.classes.iter().map(|c| c.variants.len()).max().unwrap_or(0)
    }

    #[inline]
    pub fn variant(&self, class: ClassId, size: usize) -> &CellVariant {
        &self.variants[self.classes[class.index()].variants[size]]
    }

    pub fn find(&self, class: &str, size: usize) -> Result<&CellVariant, LibraryError> {
        self.class_id(class)
            .filter(|&c| size < self.num_sizes(c))
            .map(|c| self.variant(c, size))
            .ok_or_else(|| LibraryError::UnknownCell { class: class.to_string(), size })
    }

    /// Largest load-axis knot over all tables; used to normalize load
    /// features.
    pub fn max_table_load(&self) -> f64 {
        self.variants
            .iter()
            .flat_map(|v| v.arcs.iter())
            .filter_map(|a| a.delay.load_axis.last().copied())
            .fold(0.0, f64::max)
    }

    fn validate(&self) -> Result<(), LibraryError> {
        if !(self.nominal_vdd_mv > 0.0) {
            return Err(LibraryError::Library(format!(
                "nominal vdd must be positive, got {}",
                self.nominal_vdd_mv
            )));
        }
        if self.variants.is_empty() {
            return Err(LibraryError::Library("no cells".to_string()));
        }
        for v in &self.variants {
            validate_variant(v)?;
        }
        for class in &self.classes {
            if class.variants.len() < 2 {
                return Err(LibraryError::Invariant {
                    cell: class.name.clone(),
                    rule: "class needs at least 2 size variants".to_string(),
                });
            }
            for (k, &vi) in class.variants.iter().enumerate() {
                if self.variants[vi].size_index != k {
                    return Err(LibraryError::Invariant {
                        cell: self.variants[vi].name(),
                        rule: format!("size indices must be contiguous from 0 (expected {k})"),
                    });
                }
            }
            for pair in class.variants.windows(2) {
                validate_size_step(&self.variants[pair[0]], &self.variants[pair[1]])?;
            }
        }
        Ok(())
    }
}

fn invariant(v: &CellVariant, rule: impl Into<String>) -> LibraryError {
    LibraryError::Invariant { cell: v.name(), rule: rule.into() }
}

fn strictly_increasing(axis: &[f64]) -> bool {
    axis.windows(2).all(|w| w[0] < w[1]) && axis.iter().all(|x| x.is_finite())
}

fn validate_variant(v: &CellVariant) -> Result<(), LibraryError> {
    if v.input_pins.is_empty() {
        return Err(invariant(v, "cell has no input pins"));
    }
    if v.arcs.len() != v.input_pins.len() {
        return Err(invariant(v, "every input pin needs exactly one arc"));
    }
    for (p, pin) in v.input_pins.iter().enumerate() {
        if !(pin.cap_ff.is_finite() && pin.cap_ff > 0.0) {
            return Err(invariant(v, format!("pin {} capacitance must be finite and > 0", pin.name)));
        }
        let arc = &v.arcs[p];
        if arc.from_pin != pin.name || arc.to_pin != v.output_pin {
            return Err(invariant(
                v,
                format!("arc {} -> {} does not match pin {}", arc.from_pin, arc.to_pin, pin.name),
            ));
        }
        for (kind, t) in [("delay", &arc.delay), ("slew", &arc.out_slew)] {
            if t.slew_axis.len() < 2 || t.load_axis.len() < 2 {
                return Err(invariant(v, format!("{kind} table needs at least 2x2 entries")));
            }
            if !strictly_increasing(&t.slew_axis) || !strictly_increasing(&t.load_axis) {
                return Err(invariant(v, format!("{kind} table axes must be strictly increasing")));
            }
            if t.values.len() != t.rows() * t.cols() {
                return Err(invariant(v, format!("{kind} table has wrong number of entries")));
            }
            if t.values.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                return Err(invariant(v, format!("{kind} table entries must be finite and > 0")));
            }
        }
        if arc.delay.slew_axis != arc.out_slew.slew_axis
            || arc.delay.load_axis != arc.out_slew.load_axis
        {
            return Err(invariant(v, "delay and slew tables must share axes"));
        }
        let d = &arc.delay;
        for r in 0..d.rows() {
            for c in 1..d.cols() {
                if d.at(r, c) < d.at(r, c - 1) {
                    return Err(invariant(
                        v,
                        format!("delay must be non-decreasing in load (arc {}, row {r})", pin.name),
                    ));
                }
            }
        }
    }
    for (what, x) in [
        ("leakage", v.leakage_uw),
        ("internal energy", v.internal_energy_fj),
        ("voltage sensitivity", v.voltage_sensitivity_per_mv),
    ] {
        if !(x.is_finite() && x >= 0.0) {
            return Err(invariant(v, format!("{what} must be finite and >= 0")));
        }
    }
    if !(v.area.is_finite() && v.area > 0.0) {
        return Err(invariant(v, "area must be finite and > 0"));
    }
    Ok(())
}

/// Checks that `big` (size k+1) is strictly faster than and strictly more
/// capacitive than `small` (size k) on every grid point of both variants.
fn validate_size_step(small: &CellVariant, big: &CellVariant) -> Result<(), LibraryError> {
    if small.input_pins.len() != big.input_pins.len()
        || small.input_pins.iter().zip(&big.input_pins).any(|(a, b)| a.name != b.name)
        || small.output_pin != big.output_pin
    {
        return Err(invariant(big, "pins differ within the class"));
    }
    for p in 0..small.input_pins.len() {
        if !(big.pin_cap(p) > small.pin_cap(p)) {
            return Err(invariant(
                big,
                format!("input cap of pin {} must increase with size", small.input_pins[p].name),
            ));
        }
        let (a, b) = (&small.arcs[p].delay, &big.arcs[p].delay);
        let mut slews: Vec<f64> = a.slew_axis.iter().chain(&b.slew_axis).copied().collect();
        let mut loads: Vec<f64> = a.load_axis.iter().chain(&b.load_axis).copied().collect();
        slews.sort_by(f64::total_cmp);
        loads.sort_by(f64::total_cmp);
        for &s in &slews {
            for &l in &loads {
                if !(b.lookup(s, l) < a.lookup(s, l)) {
                    return Err(invariant(
                        big,
                        format!(
                            "delay must decrease with size (arc {}, slew {s}, load {l})",
                            small.input_pins[p].name
                        ),
                    ));
                }
            }
        }
    }
    Ok(())
}
