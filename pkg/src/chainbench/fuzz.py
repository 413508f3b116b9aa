"""Seeded random generators with known-by-construction answers.

Every generator here carries a proof obligation in its construction:
random complexes are direct sums of two-term atoms with recorded
homology, conjugated by unimodular changes of basis that cannot change
homology; random chain maps are sampled from the exact kernel of the
chain condition; random extensions twist by a boundary so the total
complex is conjugate to the direct sum.  Tests lean on these knowns as
oracles that are independent of the code paths under test.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from math import gcd

from .exact_linalg import Matrix, Ring, ZZ, inverse, kernel_basis
from .chains import (
    ChainComplex,
    GradedMap,
    HomologySummary,
    graded_map_from_vector,
    leibniz_system,
)


def random_unimodular(rng: random.Random, ring: Ring, n: int, steps: int = 6) -> Matrix:
    """Random product of elementary matrices; invertible over any ring."""
    rows = [[1 if i == j else 0 for j in range(n)] for i in range(n)]
    for _ in range(steps):
        i = rng.randrange(n) if n else 0
        j = rng.randrange(n) if n else 0
        if n == 0 or i == j:
            continue
        c = rng.choice([-2, -1, 1, 2])
        for k in range(n):
            rows[i][k] += c * rows[j][k]
    return Matrix.from_rows(ZZ, rows).to_ring(ring) if n else Matrix.zero(ring, 0, 0)


def random_matrix(rng: random.Random, ring: Ring, rows: int, cols: int, bound: int = 3) -> Matrix:
    if rows == 0 or cols == 0:
        return Matrix.zero(ring, rows, cols)
    if ring.kind == "Zmod":
        data = [[rng.randrange(ring.modulus) for _ in range(cols)] for _ in range(rows)]
    elif ring.kind == "Q":
        data = [
            [Fraction(rng.randint(-bound, bound), rng.choice([1, 1, 2])) for _ in range(cols)]
            for _ in range(rows)
        ]
    else:
        data = [[rng.randint(-bound, bound) for _ in range(cols)] for _ in range(rows)]
    return Matrix.from_rows(ring, data)


def invariant_factors_of_cyclics(orders) -> tuple:
    """Invariant factor chain of a direct sum of cyclic groups Z/n.

    Orders equal to 1 are dropped; 0 is not allowed here.  The result
    lists d_1 | d_2 | ... | d_k largest last.
    """
    buckets = {}
    for n in orders:
        if n == 1:
            continue
        if n <= 0:
            raise ValueError("cyclic orders must be positive")
        left = n
        f = 2
        while f * f <= left:
            if left % f == 0:
                power = 1
                while left % f == 0:
                    left //= f
                    power *= f
                buckets.setdefault(f, []).append(power)
            f += 1
        if left > 1:
            buckets.setdefault(left, []).append(left)
    for plist in buckets.values():
        plist.sort(reverse=True)
    depth = max((len(v) for v in buckets.values()), default=0)
    chain = []
    for slot in range(depth):
        factor = 1
        for plist in buckets.values():
            if slot < len(plist):
                factor *= plist[slot]
        chain.append(factor)
    return tuple(reversed(chain))


@dataclass(frozen=True)
class RandomComplex:
    """A generated complex together with its homology known by construction."""

    complex: ChainComplex
    expected: dict


def random_complex(
    rng: random.Random,
    ring: Ring,
    max_atoms: int = 4,
    degree_span: int = 3,
    force_acyclic: bool = False,
) -> RandomComplex:
    """Direct sum of two-term and free atoms, conjugated degreewise.

    Each two-term atom contributes a single multiplication map in some
    degree; a free atom contributes one generator with zero boundary.
    Homology of the sum is read off the atoms; a final unimodular
    change of basis in every degree mixes the summands without touching
    homology.
    """
    atoms = []
    n_atoms = rng.randint(1, max_atoms)
    for _ in range(n_atoms):
        top = rng.randint(0, degree_span)
        if force_acyclic:
            kind = "unit"
        else:
            kind = rng.choice(["free", "mult", "mult", "unit"])
        if kind == "free":
            atoms.append(("free", top, 0))
        elif kind == "unit":
            atoms.append(("mult", top, rng.choice([1, -1])))
        else:
            atoms.append(("mult", top, rng.choice([0, 2, 3, 4, 6, -2])))
    ranks = {}
    entries = {}
    free_at = {}
    cyclic_at = {}

    def bump(n):
        ranks[n] = ranks.get(n, 0) + 1
        return ranks[n] - 1

    placed = []
    for kind, top, mult in atoms:
        if kind == "free":
            idx = bump(top)
            free_at[top] = free_at.get(top, 0) + 1
            placed.append((kind, top, mult, idx, None))
        else:
            i_top = bump(top)
            i_bot = bump(top - 1)
            placed.append((kind, top, mult, i_top, i_bot))
            if ring.kind == "Z":
                if mult == 0:
                    free_at[top] = free_at.get(top, 0) + 1
                    free_at[top - 1] = free_at.get(top - 1, 0) + 1
                elif abs(mult) > 1:
                    cyclic_at.setdefault(top - 1, []).append(abs(mult))
            elif ring.kind == "Q":
                if mult == 0:
                    free_at[top] = free_at.get(top, 0) + 1
                    free_at[top - 1] = free_at.get(top - 1, 0) + 1
            else:
                g = gcd(mult % ring.modulus, ring.modulus)
                if g == ring.modulus:
                    free_at[top] = free_at.get(top, 0) + 1
                    free_at[top - 1] = free_at.get(top - 1, 0) + 1
                elif g > 1:
                    cyclic_at.setdefault(top, []).append(g)
                    cyclic_at.setdefault(top - 1, []).append(g)
    diffs = {}
    for kind, top, mult, i_top, i_bot in placed:
        if kind == "mult":
            block = entries.setdefault(top, {})
            block[(i_bot, i_top)] = mult
    for n, block in entries.items():
        rows = ranks.get(n - 1, 0)
        cols = ranks.get(n, 0)
        data = [[block.get((i, j), 0) for j in range(cols)] for i in range(rows)]
        diffs[n] = Matrix.from_rows(ZZ, data).to_ring(ring) if rows and cols else None
    diffs = {n: m for n, m in diffs.items() if m is not None}
    plain = ChainComplex.build(ring, ranks, diffs)
    basis = {n: random_unimodular(rng, ring, r) for n, r in plain.ranks}

    def u(n):
        return basis.get(n, Matrix.identity(ring, plain.rank(n)))

    mixed_diffs = {}
    for n, _ in plain.ranks:
        un_inv = inverse(u(n))
        mixed_diffs[n] = u(n - 1) @ plain.diff(n) @ un_inv
    mixed = ChainComplex.build(ring, dict(plain.ranks), mixed_diffs)
    expected = {}
    if ring.kind == "Zmod" and not ring.is_field():
        for n in mixed.degrees():
            orders = list(cyclic_at.get(n, []))
            orders.extend(ring.modulus for _ in range(free_at.get(n, 0)))
            expected[n] = HomologySummary(0, invariant_factors_of_cyclics(orders), ring.modulus)
    else:
        modulus = ring.modulus if ring.kind == "Zmod" else None
        for n in mixed.degrees():
            torsion = invariant_factors_of_cyclics(cyclic_at.get(n, [])) if ring.kind == "Z" else ()
            expected[n] = HomologySummary(free_at.get(n, 0), torsion, modulus)
    return RandomComplex(mixed, expected)


def random_graded_map(rng: random.Random, src: ChainComplex, tgt: ChainComplex, degree: int, bound: int = 2) -> GradedMap:
    """Unconstrained random blocks; no chain condition imposed."""
    blocks = {}
    for n in src.degrees():
        blocks[n] = random_matrix(rng, src.ring, tgt.rank(n + degree), src.rank(n), bound)
    return GradedMap.build(src, tgt, degree, blocks)


def random_chain_map(rng: random.Random, src: ChainComplex, tgt: ChainComplex, degree: int = 0, bound: int = 2) -> GradedMap:
    """Uniformly structured sample from the module of chain maps.

    Takes a random small-coefficient combination of a kernel basis of
    the chain condition, so the result commutes with the boundaries on
    the nose.  Over composite Z/m the kernel may fail to be free; use
    explicit constructions there instead.
    """
    a, active, var_size, _ = leibniz_system(src, tgt, degree)
    if not active:
        return GradedMap.zero(src, tgt, degree)
    k = kernel_basis(a)
    coeffs = random_matrix(rng, src.ring, k.cols, 1, bound)
    return graded_map_from_vector(src, tgt, degree, active, var_size, k @ coeffs)


def random_null_homotopic(rng: random.Random, src: ChainComplex, tgt: ChainComplex, degree: int = 0, bound: int = 2):
    """Pair (f, H) with dH == f; f is then a null-homotopic chain map."""
    h = random_graded_map(rng, src, tgt, degree + 1, bound)
    return h.leibniz(), h


@dataclass(frozen=True)
class RandomExtension:
    """Levelwise split extension with middle conjugate to sub + quotient."""

    incl: GradedMap
    proj: GradedMap
    sub: ChainComplex
    quotient: ChainComplex
    middle: ChainComplex


def random_extension(rng: random.Random, sub: ChainComplex, quotient: ChainComplex, bound: int = 2) -> RandomExtension:
    """Twist the direct sum by a boundary so homology stays the known sum.

    The twist block is d of a random degree-0 map, which keeps the
    square of the boundary zero and makes the extension conjugate to
    the untwisted sum by an upper-triangular change of basis.
    """
    ring = sub.ring
    w = random_graded_map(rng, quotient, sub, 0, bound)
    v = w.leibniz()
    degrees = sorted(set(sub.degrees()) | set(quotient.degrees()))
    ranks = {n: sub.rank(n) + quotient.rank(n) for n in degrees}
    diffs = {}
    for n in degrees:
        top = sub.diff(n).hstack(v.block(n))
        bot = Matrix.zero(ring, quotient.rank(n - 1), sub.rank(n)).hstack(quotient.diff(n))
        diffs[n] = top.vstack(bot)
    middle = ChainComplex.build(ring, ranks, diffs)
    basis = {n: random_unimodular(rng, ring, ranks[n]) for n in middle.degrees()}

    def u(n):
        return basis.get(n, Matrix.identity(ring, middle.rank(n)))

    mixed_diffs = {n: u(n - 1) @ middle.diff(n) @ inverse(u(n)) for n in middle.degrees()}
    mixed = ChainComplex.build(ring, ranks, mixed_diffs)
    incl_blocks = {}
    proj_blocks = {}
    for n in degrees:
        sn, qn = sub.rank(n), quotient.rank(n)
        incl_plain = Matrix.identity(ring, sn).vstack(Matrix.zero(ring, qn, sn))
        proj_plain = Matrix.zero(ring, qn, sn).hstack(Matrix.identity(ring, qn))
        incl_blocks[n] = u(n) @ incl_plain
        proj_blocks[n] = proj_plain @ inverse(u(n))
    incl = GradedMap.build(sub, mixed, 0, incl_blocks)
    proj = GradedMap.build(mixed, quotient, 0, proj_blocks)
    return RandomExtension(incl, proj, sub, quotient, mixed)


def random_cofibration(rng: random.Random, sub: ChainComplex, quotient: ChainComplex, bound: int = 2) -> GradedMap:
    """Levelwise split chain injection with the given sub and cokernel shape."""
    return random_extension(rng, sub, quotient, bound).incl


def random_module_lowering(
    rng: random.Random, ring: Ring, rank: int, s_rank: int, bound: int = 2
) -> Matrix:
    """Matrix C -> C (x) S that strictly lowers the module index.

    Entry at (module row i, factor u; column j) may be nonzero only for
    i < j, so every application of any path step lowers the module
    index and length-`rank` composites vanish identically.
    """
    data = [[0] * rank for _ in range(rank * s_rank)]
    for j in range(rank):
        for i in range(j):
            for u in range(s_rank):
                if ring.kind == "Zmod":
                    data[i * s_rank + u][j] = rng.randrange(ring.modulus)
                else:
                    data[i * s_rank + u][j] = rng.randint(-bound, bound)
    return Matrix.from_rows(ring, data)


@dataclass(frozen=True)
class RandomLadder:
    """A generated tower whose locality answers are known by construction.

    Every positive level is built as (fresh + previous) + previous (x) S
    with the descent projecting onto the tensor part, then the maps are
    twisted by a unipotent automorphism and every level is conjugated
    degreewise.  Neither step moves homology, so level i is acyclic
    exactly when all fresh pieces up to i are, and the induced map
    between adjacent descent kernels is an equivalence exactly when the
    next fresh piece and the twice-lowered level are both acyclic.
    fresh_acyclic records, per positive level, whether the fresh piece
    was acyclic.
    """

    complex: object
    fresh_acyclic: tuple
    fresh: tuple


def random_reduced_ladder(
    rng: random.Random,
    ring: Ring,
    n_levels: int = 3,
    s_rank: int = 1,
    acyclic_levels=None,
    fresh_complexes=None,
    degree_span: int = 2,
    bound: int = 2,
    scramble: bool = True,
) -> RandomLadder:
    """Reduced tower of cofibrations with descent kernels known by shape.

    acyclic_levels, when given, lists the positive levels whose fresh
    piece must be acyclic; the others get a single free generator.
    fresh_complexes overrides the fresh pieces outright.  All descents
    are degreewise split surjective by construction, all ascents split
    injective, and the stabilization index is the top level.
    """
    from .chains import direct_sum, is_acyclic
    from .diagrams import Bimodule, tensor_map_with_bimodule, tensor_with_bimodule
    from .ladder import D0Complex

    s = Bimodule(ring, s_rank)
    zero = ChainComplex.zero_complex(ring)
    levels = [zero]
    ascents = []
    descents = []
    flags = []
    fresh = []
    lam_prev = None
    alpha_prev = None
    for i in range(1, n_levels + 1):
        if fresh_complexes is not None:
            f_i = fresh_complexes[i - 1]
            make_acyclic = is_acyclic(f_i)
        else:
            if acyclic_levels is None:
                make_acyclic = rng.random() < 0.5
            else:
                make_acyclic = i in acyclic_levels
            if make_acyclic:
                f_i = random_complex(
                    rng, ring, max_atoms=1, degree_span=degree_span, force_acyclic=True
                ).complex
            else:
                f_i = ChainComplex.build(ring, {rng.randint(0, degree_span): 1}, {})
        flags.append(make_acyclic)
        fresh.append(f_i)
        prev = levels[-1]
        bs = tensor_with_bimodule(prev, s)
        ksum = direct_sum(f_i, prev)
        level = direct_sum(ksum.complex, bs)
        inc_k, inc_bs = level.inclusions
        proj_k, proj_bs = level.projections
        inc_f, inc_b = ksum.inclusions
        r_map = random_chain_map(rng, prev, f_i, 0, bound)
        if i >= 2:
            x_map = tensor_map_with_bimodule(lam_prev, s) @ alpha_prev
        else:
            x_map = GradedMap.zero(prev, bs, 0)
        lam = inc_k @ (inc_f @ r_map + inc_b) + inc_bs @ x_map
        alpha = proj_bs
        ident = GradedMap.identity(level.complex)
        a_twist = inc_k @ random_chain_map(rng, bs, ksum.complex, 0, bound) @ proj_bs
        b_twist = inc_bs @ random_chain_map(rng, ksum.complex, bs, 0, bound) @ proj_k
        theta = (ident + a_twist) @ (ident + b_twist)
        theta_inv = (ident - b_twist) @ (ident - a_twist)
        lam = theta @ lam
        alpha = alpha @ theta_inv
        levels.append(level.complex)
        ascents.append(lam)
        descents.append(alpha)
        lam_prev = lam
        alpha_prev = alpha
    if scramble:
        levels, ascents, descents = conjugate_tower(rng, ring, s, levels, ascents, descents)
    tower = D0Complex.build(s, levels, ascents, descents, n_levels)
    return RandomLadder(tower, tuple(flags), tuple(fresh))


def conjugate_tower(rng: random.Random, ring: Ring, s, levels, ascents, descents):
    """Change basis degreewise in every positive level of a tower.

    Conjugation by unimodular matrices hides any block structure the
    construction left behind while preserving every homological and
    splitting property, so generators use it as a final scrambling
    pass.  Level zero is left alone.
    """
    from .diagrams import tensor_map_with_bimodule

    n_levels = len(levels) - 1
    isos = [GradedMap.identity(levels[0])]
    mixed = [levels[0]]
    for i in range(1, n_levels + 1):
        old = levels[i]
        basis = {n: random_unimodular(rng, ring, old.rank(n)) for n in old.degrees()}
        new_diffs = {
            n: basis[n - 1] @ old.diff(n) @ inverse(basis[n])
            for n in old.degrees()
            if old.rank(n) and old.rank(n - 1)
        }
        new = ChainComplex.build(ring, {n: old.rank(n) for n in old.degrees()}, new_diffs)
        iso = GradedMap.build(old, new, 0, basis)
        mixed.append(new)
        isos.append(iso)
    inv = [
        GradedMap.build(
            mixed[i],
            levels[i],
            0,
            {n: inverse(iso.block(n)) for n in mixed[i].degrees()},
        )
        for i, iso in enumerate(isos)
    ]
    new_ascents = [isos[i + 1] @ ascents[i] @ inv[i] for i in range(n_levels)]
    new_descents = [
        tensor_map_with_bimodule(isos[i - 1], s) @ descents[i - 1] @ inv[i]
        for i in range(1, n_levels + 1)
    ]
    return mixed, new_ascents, new_descents


@dataclass(frozen=True)
class RandomKernelTower:
    """A tower all of whose descent kernels are copies of the first level.

    Level n+1 stacks the kernel complex on top of the tensored level
    below it, with a boundary-shaped twist in the corner so the slot
    splittings genuinely fail to commute with the differentials.  The
    ascents are arranged to carry the kernel slot identically across
    levels, which is exactly the shape the splitting derivation needs.
    """

    complex: object
    kernel: ChainComplex


def random_kernel_tower(
    rng: random.Random,
    ring: Ring,
    n_levels: int = 3,
    s_rank: int = 1,
    max_atoms: int = 2,
    degree_span: int = 2,
    bound: int = 1,
    twist: bool = True,
    scramble: bool = True,
    kernel: ChainComplex | None = None,
) -> RandomKernelTower:
    """Reduced tower whose splittings derivation succeeds by construction.

    With twist=False the differentials stay block diagonal, so the
    derived splittings come out as chain maps and every boundary defect
    vanishes.  With twist=True the corner of each differential carries
    an exact boundary, which leaves all homology alone but makes the
    defects nonzero.  scramble hides the block structure afterwards.
    """
    from .chains import direct_sum
    from .diagrams import Bimodule, tensor_map_with_bimodule, tensor_with_bimodule
    from .ladder import D0Complex

    s = Bimodule(ring, s_rank)
    zero = ChainComplex.zero_complex(ring)
    if kernel is None:
        kernel = random_complex(rng, ring, max_atoms=max_atoms, degree_span=degree_span).complex
        while kernel.total_rank == 0:
            kernel = random_complex(
                rng, ring, max_atoms=max_atoms, degree_span=degree_span
            ).complex
    levels = [zero, kernel]
    mus = [GradedMap.zero(zero, kernel, 0)]
    betas = [GradedMap.zero(kernel, tensor_with_bimodule(zero, s), 0)]
    j_map = GradedMap.identity(kernel)
    v_prev = None
    theta_slot_prev = GradedMap.identity(kernel)
    for i in range(1, n_levels):
        base = levels[-1]
        bs = tensor_with_bimodule(base, s)
        if twist:
            v_i = random_graded_map(rng, bs, kernel, 0, bound)
        else:
            v_i = GradedMap.zero(bs, kernel, 0)
        w_i = v_i.leibniz()
        ranks = {}
        for deg in set(kernel.degrees()) | set(bs.degrees()):
            ranks[deg] = kernel.rank(deg) + bs.rank(deg)
        diffs = {}
        for deg in ranks:
            rows = ranks.get(deg - 1, 0)
            cols = ranks[deg]
            if not rows or not cols:
                continue
            top = kernel.diff(deg).hstack(w_i.block(deg))
            bottom = Matrix.zero(ring, bs.rank(deg - 1), kernel.rank(deg)).hstack(bs.diff(deg))
            diffs[deg] = top.vstack(bottom)
        level_next = ChainComplex.build(ring, ranks, diffs, validate=True)
        inc_blocks, beta_blocks, theta_blocks = {}, {}, {}
        for deg in ranks:
            total = ranks[deg]
            kr = kernel.rank(deg)
            ident = Matrix.identity(ring, total)
            inc_blocks[deg] = ident.cols_slice(0, kr)
            beta_blocks[deg] = ident.rows_slice(kr, total)
            theta_blocks[deg] = ident.rows_slice(0, kr)
        inc_k = GradedMap.build(kernel, level_next, 0, inc_blocks)
        beta_next = GradedMap.build(level_next, bs, 0, beta_blocks)
        theta_slot = GradedMap.build(level_next, kernel, 0, theta_blocks)
        q_i = tensor_map_with_bimodule(mus[-1], s) @ betas[-1]
        if i == 1:
            n_i = GradedMap.identity(kernel)
        else:
            n_i = theta_slot_prev + v_prev @ betas[-1]
        if not n_i.is_chain_map():
            raise AssertionError("kernel projection noise failed to be a chain map")
        p_i = n_i - v_i @ q_i
        mu_blocks = {
            deg: p_i.block(deg).vstack(q_i.block(deg)) for deg in base.degrees()
        }
        mu_i = GradedMap.build(base, level_next, 0, mu_blocks)
        if not mu_i.is_chain_map():
            raise AssertionError("tower ascent failed to be a chain map")
        j_map = mu_i @ j_map
        if j_map != inc_k:
            raise AssertionError("ascent moved the kernel slot")
        levels.append(level_next)
        mus.append(mu_i)
        betas.append(beta_next)
        v_prev = v_i
        theta_slot_prev = theta_slot
    if scramble:
        levels, mus, betas = conjugate_tower(rng, ring, s, levels, mus, betas)
    tower = D0Complex.build(s, levels, mus, betas, n_levels)
    return RandomKernelTower(tower, tower.level(1))


def random_single_degree_loop(
    rng: random.Random,
    ring: Ring,
    s_rank: int = 1,
    max_rank: int = 4,
    degree: int = 0,
    lowering: bool = True,
    bound: int = 2,
):
    """Loop object on a complex concentrated in one degree.

    With no differential the chain condition is vacuous, so any matrix
    gives a valid loop; with lowering=True the loop is nilpotent by
    construction.  Returns the loop object from the diagrams module.
    """
    from .diagrams import Bimodule, loop_object, tensor_with_bimodule

    rank = rng.randrange(1, max_rank + 1)
    c = ChainComplex.build(ring, {degree: rank}, {})
    s = Bimodule(ring, s_rank)
    if lowering:
        block = random_module_lowering(rng, ring, rank, s_rank, bound)
    else:
        block = random_matrix(rng, ring, rank * s_rank, rank, bound)
    f = GradedMap.build(c, tensor_with_bimodule(c, s), 0, {degree: block})
    return loop_object(f, s)
