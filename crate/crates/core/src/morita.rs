//! The 2-cycle `σ_L`, its bounding 3-chain, and the infinitesimal
//! Morita–Milnor class in `H_3(L / L_{>= k+1})`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expansion::SpecialExpansion;
use crate::koszul::{homology, nilpotent_basis, phi_class, phi_matrix, solve_boundary, ExteriorChain, HomologyClass};
use crate::lie::{HTensorLie, LieElement};
use crate::linalg::PivotOrder;
use crate::milnor::{art_theta_data, check_filtration, LinkData, SpecialAutData};
use crate::rational::to_pq;
use crate::trees::{enumerate_trees, eta_inverse, TreeCombination};

/// A link in `SL_n(k+1)` with a special expansion known to degree `2k+2`.
#[derive(Debug, Clone)]
pub struct MoritaInput {
    k: usize,
    aut: SpecialAutData,
}

impl MoritaInput {
    /// Computes `Art^θ(L)` to degree `2k+2` and checks that `μ^θ(L)`
    /// vanishes below degree `k+1`.
    pub fn new(data: &LinkData, theta: &SpecialExpansion, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Precondition("k must be >= 1".into()));
        }
        let trunc = Self::required_truncation(k);
        if theta.truncation() < trunc {
            return Err(Error::Precondition(format!(
                "the expansion is known to degree {} but k = {k} needs degree {trunc}",
                theta.truncation()
            )));
        }
        let aut = art_theta_data(data, theta, trunc)?;
        check_filtration(&aut.milnor(), k + 1)?;
        Ok(MoritaInput { k, aut })
    }

    /// Expansion degree needed for filtration parameter `k`.
    pub fn required_truncation(k: usize) -> usize {
        2 * k + 2
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.aut.n()
    }

    /// `μ^θ(L)` in degrees `k+1 ..= 2k+1`.
    pub fn milnor(&self) -> HTensorLie {
        self.aut.milnor()
    }

    /// `μ^θ_{[k+1, 2k+1[}(L)`.
    pub fn truncated_milnor(&self) -> HTensorLie {
        self.milnor().degree_range(self.k + 1, 2 * self.k).retruncate(2 * self.k)
    }
}

/// `σ_L = sum_i sum_l X_i ∧ Y_i^(l)` over `l in [k+1, 2k+1]`, in
/// `Λ^2 (L / L_{>= 2k+2})`.
pub fn sigma(input: &MoritaInput) -> ExteriorChain {
    let (n, k) = (input.n(), input.k);
    let class = 2 * k + 1;
    let basis = nilpotent_basis(n, class);
    let mut out = ExteriorChain::zero(basis.clone(), 2);
    for i in 1..=n {
        let x = LieElement::generator(n, class, i);
        let y = input.aut.y(i).degree_range(k + 1, class).retruncate(class);
        out = out.try_add(&ExteriorChain::wedge(basis.clone(), &[x, y])).expect("same space");
    }
    out
}

/// `t_L` with `∂_3 t_L = σ_L` in `Λ^3 (L / L_{>= 2k+1})`.
pub fn bounding_chain(input: &MoritaInput, order: PivotOrder) -> Result<ExteriorChain> {
    let s = sigma(input).reduce(2 * input.k)?;
    solve_boundary(&s, order).map_err(|e| match e {
        Error::Precondition(m) => Error::Internal(format!("σ_L has no bounding chain: {m}")),
        other => other,
    })
}

/// `M̄^θ_{k+1}(L)`, using the given pivot order to choose `t_L`.
pub fn morita_milnor_with(input: &MoritaInput, order: PivotOrder) -> Result<HomologyClass> {
    let t = bounding_chain(input, order)?.reduce(input.k)?;
    let h = homology(3, input.n(), input.k)?;
    h.project(&t).map_err(|e| match e {
        Error::NotACycle => Error::Internal("reduced t_L is not a cycle".into()),
        other => other,
    })
}

/// `M̄^θ_{k+1}(L)` in `H_3(L / L_{>= k+1})`.
pub fn morita_milnor(input: &MoritaInput) -> Result<HomologyClass> {
    morita_milnor_with(input, PivotOrder::Forward)
}

/// Both sides of the square: the Morita–Milnor class and the class
/// obtained from the truncated Milnor invariant through trees.
#[derive(Debug, Clone)]
pub struct DiagramCheck {
    pub morita: HomologyClass,
    pub via_trees: HomologyClass,
    pub trees: TreeCombination,
}

impl DiagramCheck {
    pub fn commutes(&self) -> bool {
        self.morita == self.via_trees
    }

    pub fn report(&self) -> DiagramReport {
        DiagramReport {
            commutes: self.commutes(),
            fingerprint: self.morita.homology().fingerprint().to_string(),
            morita: self.morita.coordinates().iter().map(to_pq).collect(),
            via_trees: self.via_trees.coordinates().iter().map(to_pq).collect(),
        }
    }
}

/// Serializable summary of a [`DiagramCheck`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DiagramReport {
    pub commutes: bool,
    pub fingerprint: String,
    pub morita: Vec<String>,
    pub via_trees: Vec<String>,
}

/// Computes both paths around the square.
pub fn commutative_diagram(input: &MoritaInput) -> Result<DiagramCheck> {
    let morita = morita_milnor(input)?;
    let trees = eta_inverse(&input.truncated_milnor())?;
    let via_trees = phi_class(&trees, input.n(), input.k + 1)?;
    Ok(DiagramCheck { morita, via_trees, trees })
}

/// True when `Φ(η^-1(μ^θ_{[k+1, 2k+1[}(L))) = M̄^θ_{k+1}(L)`.
pub fn verify_commutative_diagram(input: &MoritaInput) -> Result<bool> {
    Ok(commutative_diagram(input)?.commutes())
}

/// `η_{k+1}` of the degree-`(k+1)` part of `Φ^-1(x)`, for `x` in
/// `H_3(L / L_{>= k+1})`.
pub fn d2_composition(x: &HomologyClass) -> Result<HTensorLie> {
    let h = x.homology();
    if h.p() != 3 {
        return Err(Error::Mismatch("d2 acts on H_3".into()));
    }
    let (n, k) = (h.basis().n(), h.basis().class());
    let l = k + 1;
    let mut b = TreeCombination::zero();
    let coords = x.coordinates_in(l + 1);
    if coords.iter().any(|c| !num_traits::Zero::is_zero(c)) {
        let m = phi_matrix(n, k + 1, l)?;
        let sol = m
            .solve(&coords, PivotOrder::Forward)
            .ok_or_else(|| Error::Internal(format!("Φ is not onto in degree {}", l + 1)))?;
        for (t, c) in enumerate_trees(n, l)?.iter().zip(sol) {
            b.add_term(t.clone(), c);
        }
    }
    b.eta(n, l)
}
