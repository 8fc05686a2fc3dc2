use std::fmt::{self, Write as _};

use crate::scalar::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Flavor {
    VitaliHilbert,
    VitaliKet,
    MartingaleHilbert,
    MartingaleKet,
    SimpleHilbert,
    SimpleKet,
    Decomposable,
}

impl Flavor {
    pub const ALL: [Flavor; 7] = [
        Flavor::VitaliHilbert,
        Flavor::VitaliKet,
        Flavor::MartingaleHilbert,
        Flavor::MartingaleKet,
        Flavor::SimpleHilbert,
        Flavor::SimpleKet,
        Flavor::Decomposable,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Flavor::VitaliHilbert => "vitali-hilbert",
            Flavor::VitaliKet => "vitali-ket",
            Flavor::MartingaleHilbert => "martingale-hilbert",
            Flavor::MartingaleKet => "martingale-ket",
            Flavor::SimpleHilbert => "simple-hilbert",
            Flavor::SimpleKet => "simple-ket",
            Flavor::Decomposable => "decomposable",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == s)
    }

    pub fn is_ket(self) -> bool {
        matches!(self, Flavor::VitaliKet | Flavor::MartingaleKet | Flavor::SimpleKet)
    }
}

impl fmt::Display for Flavor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecordRow {
    pub n: usize,
    pub l: usize,
    pub value: C64,
    pub abs_err: f64,
    pub dual_norm: f64,
}

/// One `(ξ, k)` sweep over `(n, l)` with its reference value.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRecord {
    pub flavor: Flavor,
    pub xi: f64,
    /// Channel, counted from 0.
    pub k: usize,
    pub reference: C64,
    pub reference_name: String,
    pub rows: Vec<RecordRow>,
    /// `μ′(F_n)` per `n`.
    pub masses: Vec<f64>,
    /// Largest disagreement between the alternative forms of the same functional.
    pub form_gap: f64,
    pub oscillating: bool,
}

pub const CSV_HEADER: &str = "flavor,xi,k,n,l,re,im,abs_err,dual_norm";

impl ConvergenceRecord {
    pub(crate) fn new(flavor: Flavor, xi: f64, k: usize, reference: C64, name: &str) -> Self {
        ConvergenceRecord {
            flavor,
            xi,
            k,
            reference,
            reference_name: name.to_string(),
            rows: Vec::new(),
            masses: Vec::new(),
            form_gap: 0.0,
            oscillating: false,
        }
    }

    pub(crate) fn push(&mut self, n: usize, l: usize, value: C64, dual_norm: f64) {
        let abs_err = (value - self.reference).norm();
        self.rows.push(RecordRow { n, l, value, abs_err, dual_norm });
    }

    /// Swaps in another reference and recomputes the errors.
    pub fn rebase(&mut self, reference: C64, name: &str) {
        self.reference = reference;
        self.reference_name = name.to_string();
        for r in &mut self.rows {
            r.abs_err = (r.value - reference).norm();
        }
    }

    pub fn max_l(&self) -> usize {
        self.rows.iter().map(|r| r.l).max().unwrap_or(0)
    }

    /// Rows at the largest `l`, in `n` order.
    pub fn trail(&self) -> Vec<RecordRow> {
        let l = self.max_l();
        self.rows.iter().filter(|r| r.l == l).copied().collect()
    }

    pub fn final_row(&self) -> Option<RecordRow> {
        self.trail().last().copied()
    }

    pub fn final_value(&self) -> C64 {
        self.final_row().map(|r| r.value).unwrap_or(C64::new(f64::NAN, f64::NAN))
    }

    pub fn final_error(&self) -> f64 {
        self.final_row().map(|r| r.abs_err).unwrap_or(f64::NAN)
    }

    pub fn final_relative_error(&self) -> f64 {
        self.final_error() / self.reference.norm()
    }

    pub fn write_csv_rows(&self, out: &mut String) {
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{:.16e},{},{},{},{:.16e},{:.16e},{:.16e},{:.16e}",
                self.flavor,
                self.xi,
                self.k + 1,
                r.n,
                r.l,
                r.value.re,
                r.value.im,
                r.abs_err,
                r.dual_norm
            );
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("{CSV_HEADER}\n");
        self.write_csv_rows(&mut s);
        s
    }
}
