use super::cooc::CooccurrenceCounts;
use super::sparse::CsrMatrix;
use crate::error::{invalid, Result};

/// Negative-sampling shift `s`; the PMI is lowered by `ln s` before clamping.
pub const DEFAULT_SHIFT: f64 = 15.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SppmiMatrix {
    pub matrix: CsrMatrix,
    pub shift: f64,
}

/// `max(ln(p(x,y) / (p(x) p(y))) - ln s, 0)`, evaluated only where the pair
/// was observed. Stored entries are strictly positive.
pub fn sppmi(counts: &CooccurrenceCounts, shift: f64) -> Result<SppmiMatrix> {
    if shift < 1.0 || !shift.is_finite() {
        return Err(invalid(format!("shift must be >= 1, got {shift}")));
    }
    let total = counts.total_pair_mass();
    if total <= 0.0 {
        return Err(invalid("co-occurrence counts are empty"));
    }
    let marginals = counts.marginals();
    let csr = counts.to_csr();
    let rows = (0..csr.nrows())
        .map(|x| {
            csr.row(x)
                .filter_map(|(y, c)| {
                    let v = sppmi_entry(c, marginals[x], marginals[y], total, shift);
                    (v > 0.0).then_some((y as u32, v))
                })
                .collect()
        })
        .collect();
    Ok(SppmiMatrix {
        matrix: CsrMatrix::from_rows(counts.vocab_size(), rows),
        shift,
    })
}

/// Single SPPMI value from a pair count, both marginals and the total mass.
pub fn sppmi_entry(count: f64, m_x: f64, m_y: f64, total: f64, shift: f64) -> f64 {
    if count <= 0.0 {
        return 0.0;
    }
    // one logarithm of the whole ratio keeps exact independence at exactly 0
    (count * total / (m_x * m_y * shift)).ln().max(0.0)
}
