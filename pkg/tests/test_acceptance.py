"""Acceptance suite: eight criteria, one verdict line each.

Every criterion is its own test, so a verbose run prints one pass or
fail line per criterion; each body also prints a summary with its
runtime and asserts the documented time budget.  Oracles are shared
with the unit-test modules so the acceptance run exercises the same
independent cross-checks: sympy-free brute-force boxes for Diophantine
verdicts, construction-time homology tables, matrix-power nilpotency
indices, and generator flags for tower locality.
"""

import random
import time
from math import lcm

from chainbench.chains import (
    ChainComplex,
    GradedMap,
    cone,
    cylinder,
    direct_sum,
    homology,
    is_acyclic,
    is_contractible,
    is_homology_equivalence,
    same_homology,
    validate_ses,
)
from chainbench.diagrams import Bimodule, dcomplex_direct_sum, nilpotency_degree
from chainbench.exact_linalg import Matrix, QQ, ZZ, Zmod, smith_normal_form, solve_linear
from chainbench.fuzz import (
    random_chain_map,
    random_complex,
    random_graded_map,
    random_kernel_tower,
    random_reduced_ladder,
    random_single_degree_loop,
)
from chainbench.ladder import (
    check_an_local,
    check_bn_local,
    classify,
    constant_tower,
    d0_direct_sum,
    d0_zero_morphism,
    factor_through_acyclic,
    hom_complex,
    kernel_complex,
    morphism_space,
)
from chainbench.ladder import test_object as probe
from chainbench.orders import (
    annihilator_exponent,
    classify_order_class,
    hom_vanishing_F_to_G,
    homology_order,
)
from chainbench.splittings import (
    F_from_fhat,
    delta_differential,
    derive_splittings,
    fhat_from_F,
    invert_homotopy,
    t_differential_holds,
    t_operator,
    tensor_power_map,
)

from test_diagrams import nilpotency_index_oracle
from test_exact_linalg import brute_box_solutions, check_snf_contract, rand_matrix
from test_ladder import an_oracle, bn_oracle
from test_orders import delayed, random_atoms, torsion_complex
from test_splittings import check_boxed_identities, twisted_pair


def run_criterion(number, label, budget, body):
    start = time.perf_counter()
    try:
        body()
    except BaseException:
        print(f"criterion {number} ({label}): FAIL")
        raise
    elapsed = time.perf_counter() - start
    verdict = "pass" if elapsed < budget else "FAIL (over budget)"
    print(f"criterion {number} ({label}): {verdict} [{elapsed:.1f}s of {budget}s]")
    assert elapsed < budget, f"criterion {number} took {elapsed:.1f}s, budget {budget}s"


def test_criterion_1_smith_and_diophantine():
    def body():
        rng = random.Random(1)
        for _ in range(500):
            rows, cols = rng.randint(0, 6), rng.randint(0, 6)
            a = rand_matrix(rng, ZZ, rows, cols, bound=9)
            check_snf_contract(a, smith_normal_form(a))
        none_count = some_count = 0
        for _ in range(60):
            a = rand_matrix(rng, ZZ, 3, 3, bound=3)
            b = rand_matrix(rng, ZZ, 3, 1, bound=4)
            x = solve_linear(a, b)
            boxed = brute_box_solutions(a, b, 3)
            if x is not None:
                some_count += 1
                assert a @ x == b
            else:
                none_count += 1
                assert boxed == []
            if boxed:
                assert x is not None
        assert none_count >= 5 and some_count >= 5

    run_criterion(1, "smith contract and diophantine verdicts", 10.0, body)


def test_criterion_2_chain_core():
    def body():
        rng = random.Random(2)
        rings = [ZZ, QQ, Zmod(6)]
        complexes = 0
        for i in range(120):
            ring = rings[i % 3]
            made = random_complex(rng, ring, force_acyclic=(i % 5 == 0))
            c = made.complex
            c.validate()
            for n in c.degrees():
                assert (c.diff(n - 1) @ c.diff(n)).is_zero()
            assert homology(c) == made.expected
            if ring is ZZ:
                assert is_acyclic(c) == is_contractible(c)
            complexes += 1
        misses = 0
        for i in range(40):
            ring = [ZZ, QQ][i % 2]
            src = random_complex(rng, ring).complex
            tgt = random_complex(rng, ring).complex
            complexes += 2
            f = random_chain_map(rng, src, tgt)
            equivalence = is_homology_equivalence(f)
            assert is_acyclic(cone(f).complex) == equivalence
            misses += not equivalence
            cyl = cylinder(f)
            ses = validate_ses(cyl.incl_source, cyl.quotient)
            assert ses.middle == cyl.complex
            assert cyl.proj @ cyl.incl_source == f
            assert is_homology_equivalence(cyl.proj)
        assert misses > 5
        assert complexes == 200

    run_criterion(2, "chain core invariants on 200 fuzzed complexes", 30.0, body)


def test_criterion_3_nilpotency():
    def body():
        rng = random.Random(3)
        rings = [ZZ, QQ, Zmod(4), Zmod(5), Zmod(6)]
        seen = []
        for i in range(100):
            ring = rings[i % 5]
            obj = random_single_degree_loop(rng, ring, s_rank=1, lowering=True)
            f = obj.map_for("x")
            degree = f.source.degrees()[0]
            r = f.source.rank(degree)
            rows = [list(row) for row in f.block(degree).entries]
            index = nilpotency_index_oracle(ring, rows, r + 1)
            assert index is not None
            assert nilpotency_degree(obj, r + 1) == index - 1
            seen.append(index - 1)
        assert min(seen) == 0 and max(seen) >= 2
        for i in range(12):
            ring = [ZZ, QQ, Zmod(5)][i % 3]
            x = random_single_degree_loop(rng, ring, s_rank=1, lowering=True)
            y = random_single_degree_loop(rng, ring, s_rank=1, lowering=True)
            both = dcomplex_direct_sum(x, y)
            cap = x.complex_at("v").total_rank + y.complex_at("v").total_rank + 1
            dx = nilpotency_degree(x, cap)
            dy = nilpotency_degree(y, cap)
            assert nilpotency_degree(both, cap) == max(dx, dy)

    run_criterion(3, "nilpotency degree against matrix powers", 30.0, body)


def test_criterion_4_unit_probes_see_kernels():
    def body():
        rings = [ZZ, QQ, Zmod(3)]
        for seed in range(50):
            rng = random.Random(4000 + seed)
            ring = rings[seed % 3]
            lad = random_reduced_ladder(rng, ring)
            c, flags = lad.complex, lad.fresh_acyclic
            s = Bimodule(ring, 1)
            for m in (1, 2, 3):
                hc = hom_complex(probe("g_m", m, 3, s), c)
                assert same_homology(hc.complex, hc.kernel.complex)
                assert hc.to_kernel @ hc.from_kernel == GradedMap.identity(hc.kernel.complex)
                assert hc.from_kernel @ hc.to_kernel == GradedMap.identity(hc.complex)
            rep = check_bn_local(c, 3)
            direct = all(is_contractible(c.level(i)) for i in range(4))
            assert rep.holds == direct == bn_oracle(flags, 3)
            assert rep.kernel_route == rep.holds

    run_criterion(4, "unit probe hom complexes compute descent kernels", 60.0, body)


def test_criterion_5_kernel_ses_and_an_locality():
    def body():
        rings = [ZZ, QQ, Zmod(3)]
        for seed in range(50):
            rng = random.Random(5000 + seed)
            ring = rings[seed % 3]
            lad = random_reduced_ladder(rng, ring)
            c, flags = lad.complex, lad.fresh_acyclic
            for m in (1, 2, 3):
                k = kernel_complex(c, m)
                assert k.inclusion.leibniz().is_zero()
                assert c.alpha_map(m).leibniz().is_zero()
                ses = validate_ses(k.inclusion, c.alpha_map(m))
                assert ses.middle == c.level(m)
            s = Bimodule(ring, 1)
            for m in (1, 2):
                hc = hom_complex(probe("g_m_cone", m, 3, s), c)
                assert hc.connecting_matches_ascent
            for n in (1, 2):
                inc = check_an_local(c, n, "inclusive")
                assert inc.holds == an_oracle(flags, range(1, n + 1))
                assert inc.square_holds == inc.holds
                st = check_an_local(c, n, "strict")
                assert st.holds == an_oracle(flags, range(1, n))
                assert st.square_holds == st.holds
                for _, kernel_ok, square_ok in inc.checked:
                    assert kernel_ok == square_ok
            top_strict = check_an_local(c, 3, "strict")
            assert top_strict.square_holds == top_strict.holds

    run_criterion(5, "kernel sequences and range locality routes", 60.0, body)


def test_criterion_6_splitting_calculus():
    def body():
        instances = 0
        rings = [ZZ, QQ, Zmod(3)]
        for seed in range(30):
            ring = rings[seed % 3]
            a, b = twisted_pair(6000 + seed, ring)
            s = derive_splittings(a, b)
            check_boxed_identities(s)
            for p in range(s.top_index - 1):
                assert t_differential_holds(s, p)
            rng = random.Random(6100 + seed)
            f = random_graded_map(rng, s.total.complex, s.kernel, seed % 2, 2)
            assert delta_differential(s, delta_differential(s, f)).is_zero()
            bim = a.bimodule
            fams = fhat_from_F(s, f)
            coords = [f @ inc for inc in s.total.inclusions]
            assert fams[0] == s.j_map(1) @ f @ s.total.lambda_inf[0]
            for n in range(1, s.top_index):
                recursion = (
                    s.j_map(n + 1) @ s.theta_map(n) @ fams[n - 1] @ s.u_map(n)
                    + s.sigma_map(n + 1)
                    @ tensor_power_map(fams[n - 1], bim, 1)
                    @ s.alpha_map(n + 1)
                    + s.j_map(n + 1) @ coords[n] @ s.pi_map(n + 1)
                )
                assert fams[n] == recursion
            assert F_from_fhat(s, fams) == f
            cycle = delta_differential(s, f)
            lifted = invert_homotopy(s, s.total, cycle)
            assert delta_differential(s, lifted) == cycle
            instances += 1
        kernel = ChainComplex.build(ZZ, {0: 1, 1: 1}, {1: Matrix.from_rows(ZZ, [[2]])})
        seen_nonzero = False
        for seed in range(20):
            rng = random.Random(6200 + seed)
            tower = random_kernel_tower(
                rng, ZZ, n_levels=6, twist=True, scramble=True, kernel=kernel
            )
            kind = "g_m_cone" if seed % 2 else "g_m"
            a = probe(kind, 1, 6, tower.complex.bimodule)
            s = derive_splittings(a, tower.complex)
            check_boxed_identities(s)
            for p in range(5):
                assert t_differential_holds(s, p)
                seen_nonzero = seen_nonzero or not t_operator(s, p).map.is_zero()
            f = random_graded_map(rng, s.total.complex, s.kernel, 0, 2)
            assert delta_differential(s, delta_differential(s, f)).is_zero()
            if kind == "g_m_cone":
                cycle = delta_differential(s, f)
                lifted = invert_homotopy(s, s.total, cycle)
                assert delta_differential(s, lifted) == cycle
            instances += 1
        assert seen_nonzero
        assert instances == 50

    run_criterion(6, "splitting data identities on 50 instances", 120.0, body)


def test_criterion_7_factorizations():
    def body():
        s = Bimodule(ZZ, 1)
        moore = ChainComplex.build(ZZ, {0: 1, 1: 1}, {1: Matrix.from_rows(ZZ, [[2]])})
        for seed in range(30):
            rng = random.Random(7000 + seed)
            lad_d = random_reduced_ladder(
                rng, ZZ, n_levels=2, acyclic_levels={1, 2}, degree_span=1
            )
            lad_c = random_reduced_ladder(
                rng, ZZ, n_levels=2, acyclic_levels={1, 2}, degree_span=1
            )
            d = d0_direct_sum(lad_d.complex, constant_tower(moore, 2, s))
            c = lad_c.complex
            assert classify(d, 1).in_bn
            ms = morphism_space(d, c)
            f = ms.basis[seed % ms.dimension] if ms.dimension else d0_zero_morphism(d, c)
            fac = factor_through_acyclic(f, 1)
            assert len(fac.contractions) == 3
            for i, k in enumerate(fac.contractions):
                assert k is not None
                assert k.leibniz() == GradedMap.identity(fac.mid.level(i))
            for i in range(3):
                assert fac.right.component(i) @ fac.left.component(i) == f.component(i)

    run_criterion(7, "factorizations through contractible towers", 60.0, body)


def test_criterion_8_order_calculus():
    def body():
        rng = random.Random(8)
        for _ in range(10):
            a = torsion_complex(rng, random_atoms(rng))
            b = torsion_complex(rng, random_atoms(rng))
            oa = homology_order(a).order
            ob = homology_order(b).order
            assert homology_order(direct_sum(a, b).complex).order == oa * ob
        for _ in range(12):
            atoms = random_atoms(rng)
            c = torsion_complex(rng, atoms)
            e = lcm(*[t for _, t in atoms])
            rep = annihilator_exponent(c)
            assert rep.exponent % e == 0
            assert (e * e) % rep.exponent == 0
            assert rep.witness.leibniz() == GradedMap.identity(c).scale(rep.exponent)
        for _ in range(8):
            c = torsion_complex(rng, random_atoms(rng))
            doubled = cylinder(GradedMap.identity(c)).complex
            assert classify_order_class(doubled, 2, 3) == classify_order_class(c, 2, 3)
        saw_variables = False
        for seed in range(50):
            rng2 = random.Random(8800 + seed)
            lad = random_reduced_ladder(rng2, ZZ, n_levels=2, degree_span=1)
            y = delayed(lad.complex)
            bim = lad.complex.bimodule
            if seed % 2:
                x = probe("g_m", 1, y.top_index, bim)
            else:
                x = constant_tower(random_complex(rng2, ZZ).complex, y.top_index, bim)
            rep = hom_vanishing_F_to_G(x, y)
            assert rep.vanishes and rep.dimension == 0
            assert rep.constraint_rank == rep.variables
            saw_variables = saw_variables or rep.variables > 0
        assert saw_variables

    run_criterion(8, "order, annihilator, and vanishing calculus", 30.0, body)
