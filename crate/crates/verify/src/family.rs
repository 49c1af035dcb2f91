use gft_core::dist::{check_fsd, Distribution};
use gft_core::scalar::{int, ratio, Rational};

/// Every discrete distribution on a fixed value set whose probabilities are
/// multiples of `1 / denominator`.
#[derive(Clone, Debug, PartialEq)]
pub struct DistributionFamily {
    pub support: Vec<Rational>,
    pub denominator: u32,
}

impl Default for DistributionFamily {
    /// Supports within {0, 1, 2, 3}, probabilities in quarters.
    fn default() -> Self {
        Self {
            support: (0..4).map(int).collect(),
            denominator: 4,
        }
    }
}

impl DistributionFamily {
    /// Members in a fixed order: lexicographic in the count vector over the
    /// (sorted) support values.
    pub fn members(&self) -> Vec<Distribution> {
        let mut support = self.support.clone();
        support.sort();
        support.dedup();
        let mut out = Vec::new();
        let mut counts = vec![0u32; support.len()];
        fill(&mut counts, 0, self.denominator, &mut |c| {
            let atoms = support
                .iter()
                .zip(c)
                .filter(|(_, &n)| n > 0)
                .map(|(v, &n)| (v.clone(), ratio(n as i64, self.denominator as i64)))
                .collect();
            out.push(Distribution::discrete(atoms).expect("family member is valid"));
        });
        out
    }

    /// Members with at most `max_support` atoms.
    pub fn members_up_to(&self, max_support: usize) -> Vec<Distribution> {
        self.members()
            .into_iter()
            .filter(|d| d.support_len().unwrap_or(usize::MAX) <= max_support)
            .collect()
    }

    /// Ordered `(seller, buyer)` pairs where the buyer distribution dominates.
    pub fn fsd_pairs(&self, max_support: usize) -> Vec<(Distribution, Distribution)> {
        let members = self.members_up_to(max_support);
        let mut out = Vec::new();
        for s in &members {
            for b in &members {
                if check_fsd(b, s) {
                    out.push((s.clone(), b.clone()));
                }
            }
        }
        out
    }

    /// Every ordered `(seller, buyer)` pair.
    pub fn all_pairs(&self, max_support: usize) -> Vec<(Distribution, Distribution)> {
        let members = self.members_up_to(max_support);
        members
            .iter()
            .flat_map(|s| members.iter().map(move |b| (s.clone(), b.clone())))
            .collect()
    }
}

fn fill(counts: &mut Vec<u32>, i: usize, left: u32, emit: &mut impl FnMut(&[u32])) {
    if i + 1 == counts.len() {
        counts[i] = left;
        emit(counts);
        return;
    }
    for c in 0..=left {
        counts[i] = c;
        fill(counts, i + 1, left - c, emit);
    }
}
