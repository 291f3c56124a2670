//! The identity each named check verifies.

const REGISTRY: &[(&str, &str)] = &[
    ("torsion", "∇_X Y - ∇_Y X - [X,Y] = 0"),
    ("nabla_omega", "∇ω = 0"),
    ("bianchi", "R(X,Y)Z + R(Y,Z)X + R(Z,X)Y = 0"),
    ("ricci_symmetry", "r(X,Y) = r(Y,X)"),
    ("ricci_trace_relation", "Σ_i ω(R(e_i,e^i)X, Y) = -2 r(X,Y)"),
    ("decomposition", "R = E + W"),
    ("w_trace", "Tr(Z ↦ W(X,Z)Y) = 0"),
    ("ricci_type", "W = 0"),
    ("not_ricci_type", "W ≠ 0"),
    ("preferred", "⊕_{XYZ} (∇_X r)(Y,Z) = 0"),
    ("rebuild", "R(X,Y) = -1/(2(n+1)) [-2ω(X,Y)ρ - ρY⊗X̲ + ρX⊗Y̲ - X⊗(ρY)̲ + Y⊗(ρX)̲]"),
    ("rho_formula", "ρX = -2(n+1) Ā_x X̄"),
    ("u_formula", "U = -2(n+1)(2n+1) Ā²_x x"),
    ("f_formula", "f = 2(n+1)(2n+1) Ω′(A²x, Ax)"),
    ("k_constant", "K = tr ρ² + 4(n+1)/(2n+1) f is constant"),
    ("induced_ricci", "r^{∇P} = 0"),
    ("induced_curvature_nonzero", "R^{∇P} ≠ 0"),
    ("induced_flat", "R^{∇P} = 0"),
    ("closed_form_blocks", "R^{∇P}(X̄,Ȳ)Z̄, R^{∇P}(X̄,Ȳ)E, R^{∇P}(X̄,E)Z̄, R^{∇P}(X̄,E)E as functions of R, σ, U, f"),
    ("zero_blocks", "R^{∇P}(·,·)S = 0, R^{∇P}(S,·) = 0"),
    ("gamma_recovery", "reduction of ∇^P along Ẽ and Σ = {s = 0} gives ∇"),
    ("omega_recovery", "reduction of μ gives ω"),
    ("horizontality", "μ(Ẽ, Ȳ) = μ(S, Ȳ) = 0"),
    ("base_w_norm", "max |W| of the base connection"),
    ("twistor_defect", "j⁺R(j⁻X, j⁻Y)j⁻Z = 0"),
    ("twistor_defect_nonzero", "j⁺R(j⁻X, j⁻Y)j⁻Z ≠ 0 for some j"),
    ("twistor_injected_w", "j⁺W(j⁻X, j⁻Y)j⁻Z ≠ 0 for some j"),
    ("uniqueness_rank", "dim{R : j⁺R(j⁻X, j⁻Y)j⁻Z = 0 ∀j} = dim S²V"),
    ("symmetry_involution", "s_x ∘ s_x = id"),
    ("symplectomorphism", "|det D s_x| = 1"),
    ("symmetry_law", "s_{s_x(y)} = s_x s_y s_x"),
    ("admissibility", "S(x,y,z) = -S(x, s_x(y), z)"),
    ("antisymmetry", "S(x,y,z) = -S(y,x,z)"),
    ("diagonal_invariance", "S(s_w x, s_w y, s_w z) = S(x,y,z)"),
    ("fixed_point", "s_x s_y s_z(X) = X"),
    ("jac_amplitude", "√Jac_Φ = P(a_x - a_z)P(a_y - a_x)/P(a_y - a_z) · A⁰(y,z)"),
    ("jac_amplitude_ratio", "√Jac_Φ / (P(a_x - a_z)P(a_y - a_x)/P(a_y - a_z) · A⁰(y,z))"),
    ("jac_l_independence", "∂_ℓ Jac_Φ = 0"),
    ("expansion_slope", "u ⋆ v = uv + (θ/2i){u,v} + O(θ²)"),
    ("refinement_margin", "quadrature error ≤ residual / 10"),
    ("first_order_coefficient", "(u ⋆ v - uv)/θ → κ (1/2i){u,v}"),
    ("cocycle_flat", "δS = 0"),
    ("cocycle_curved", "δS ≠ 0"),
    ("geometric_associativity", "S(a,b,t) + S(t,c,d) = S(a,φt,d) + S(φt,b,c), φ = s_g"),
    ("curved_no_barycentre", "min_g max_t |S(a,b,t) + S(t,c,d) - S(a,φt,d) - S(φt,b,c)| > 0"),
    ("koszul", "as + sa = (p+q) Id, a² = s² = 0"),
];

/// Identity for a check name; a bracketed suffix such as `koszul[dim=2]` is
/// ignored. Unregistered names are a programming error.
pub fn equation(name: &str) -> &'static str {
    let base = name.split('[').next().unwrap_or(name);
    REGISTRY
        .iter()
        .find(|(n, _)| *n == base)
        .map(|(_, e)| *e)
        .unwrap_or_else(|| panic!("check `{base}` is not in the equation registry"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_are_unique_and_resolve() {
        let mut names: Vec<&str> = REGISTRY.iter().map(|(n, _)| *n).collect();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), REGISTRY.len());
        assert_eq!(equation("koszul[dim=2,q=1,p=2]"), equation("koszul"));
    }
}
