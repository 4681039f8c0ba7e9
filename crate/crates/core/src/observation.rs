use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypergraph::EdgeId;

/// What an [`ObservationMap`] holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ObservationKind {
    /// Real weights in `[lo, hi]`.
    Weight { lo: f64, hi: f64 },
    /// Integer labels in `1..=q`.
    Label { q: u32 },
}

/// Partial map `F` from hyperedge ids to weights or labels. Its domain is the
/// set of observed hyperedges `E₀`.
///
/// Storage is dense over all hyperedge ids; labels are stored as integral
/// `f64` so neighborhood statistics treat both kinds uniformly.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationMap {
    kind: ObservationKind,
    values: Vec<Option<f64>>,
    domain: Vec<EdgeId>,
}

impl ObservationMap {
    pub fn weights<I>(edge_count: usize, lo: f64, hi: f64, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (EdgeId, f64)>,
    {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(Error::InvalidParameter(format!("weight range [{lo}, {hi}] is empty")));
        }
        let mut values = vec![None; edge_count];
        for (e, w) in entries {
            if !(lo..=hi).contains(&w) {
                return Err(Error::OutOfRange { value: w, range: format!("[{lo}, {hi}]") });
            }
            values[e.index()] = Some(w);
        }
        Ok(Self::from_values(ObservationKind::Weight { lo, hi }, values))
    }

    pub fn labels<I>(edge_count: usize, q: u32, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (EdgeId, u32)>,
    {
        if q == 0 {
            return Err(Error::InvalidParameter("q must be positive".into()));
        }
        let mut values = vec![None; edge_count];
        for (e, l) in entries {
            if !(1..=q).contains(&l) {
                return Err(Error::OutOfRange { value: l as f64, range: format!("1..={q}") });
            }
            values[e.index()] = Some(l as f64);
        }
        Ok(Self::from_values(ObservationKind::Label { q }, values))
    }

    fn from_values(kind: ObservationKind, values: Vec<Option<f64>>) -> Self {
        let domain = values.iter().enumerate().filter(|(_, v)| v.is_some()).map(|(i, _)| EdgeId(i as u32)).collect();
        ObservationMap { kind, values, domain }
    }

    pub fn kind(&self) -> ObservationKind {
        self.kind
    }

    pub fn is_label(&self) -> bool {
        matches!(self.kind, ObservationKind::Label { .. })
    }

    /// Number of labels for a label map.
    pub fn q(&self) -> Option<u32> {
        match self.kind {
            ObservationKind::Label { q } => Some(q),
            ObservationKind::Weight { .. } => None,
        }
    }

    /// Total number of hyperedge ids the map is defined over (observed or not).
    pub fn edge_count(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, e: EdgeId) -> Option<f64> {
        self.values.get(e.index()).copied().flatten()
    }

    pub fn label(&self, e: EdgeId) -> Option<u32> {
        if self.is_label() {
            self.get(e).map(|v| v as u32)
        } else {
            None
        }
    }

    #[inline]
    pub fn contains(&self, e: EdgeId) -> bool {
        matches!(self.values.get(e.index()), Some(Some(_)))
    }

    /// Observed hyperedges, ascending.
    pub fn domain(&self) -> &[EdgeId] {
        &self.domain
    }

    pub fn len(&self) -> usize {
        self.domain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.domain.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (EdgeId, f64)> + '_ {
        self.domain.iter().map(move |&e| (e, self.values[e.index()].unwrap()))
    }

    /// Observed min and max.
    pub fn value_range(&self) -> Option<(f64, f64)> {
        self.iter().fold(None, |acc, (_, v)| match acc {
            None => Some((v, v)),
            Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
        })
    }

    /// The same map restricted to `keep`; ids outside the domain are ignored.
    pub fn restrict(&self, keep: &[EdgeId]) -> Self {
        let mut values = vec![None; self.values.len()];
        for &e in keep {
            values[e.index()] = self.get(e);
        }
        Self::from_values(self.kind, values)
    }
}
