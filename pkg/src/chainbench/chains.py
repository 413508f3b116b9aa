"""Bounded chain complexes of finitely generated free modules.

A ChainComplex stores per-degree ranks and differentials as exact
matrices acting on column vectors, so composing maps is plain matrix
multiplication: the matrix of g after f is M(g) @ M(f).

A GradedMap of degree d sends degree n to degree n + d.  Its graded
differential follows the commutator convention

    (df)_n = boundary(n + d) @ f_n - (-1)^d * f_(n-1) @ boundary(n)

so chain maps are exactly the maps with df == 0, null-homotopies of f
are maps H with dH == f, and d(g after f) == dg after f + (-1)^deg(g)
g after df.

On top of the two core types this module provides homology with exact
torsion data, a null-homotopy solver, mapping cones and cylinders,
suspensions, direct sums, pushouts along levelwise split injections,
short exact sequence handling with rotation, and an independent
homology-equivalence test that never builds a cone.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

from .exact_linalg import (
    Matrix,
    Ring,
    ShapeMismatch,
    ZZ,
    kernel_basis,
    kernel_lattice_basis_mod,
    kron,
    rank as matrix_rank,
    is_split_surjection,
    smith_normal_form,
    solve_linear,
    split_with_complement,
    unvec_row_major,
    vec_row_major,
)


@dataclass(frozen=True)
class ChainComplex:
    """Ranks and differentials indexed by integer degree.

    ranks is a sorted tuple of (degree, positive rank) pairs; diffs is a
    sorted tuple of (degree, matrix) pairs where the matrix in slot n
    maps degree n to degree n - 1.  Zero ranks and zero differentials
    are never stored, so structural equality is canonical.
    """

    ring: Ring
    ranks: tuple
    diffs: tuple

    @staticmethod
    def build(ring: Ring, ranks, diffs=None, validate: bool = True) -> "ChainComplex":
        rank_items = ranks.items() if isinstance(ranks, dict) else ranks
        rk = {}
        for n, r in rank_items:
            n, r = int(n), int(r)
            if r < 0:
                raise ValueError(f"negative rank {r} in degree {n}")
            if r > 0:
                rk[n] = r
        df = {}
        if diffs:
            diff_items = diffs.items() if isinstance(diffs, dict) else diffs
            for n, mat in diff_items:
                n = int(n)
                if mat.ring != ring:
                    raise ShapeMismatch(f"differential in degree {n} uses {mat.ring}, complex uses {ring}")
                want = (rk.get(n - 1, 0), rk.get(n, 0))
                if mat.shape != want:
                    raise ShapeMismatch(
                        f"differential in degree {n} has shape {mat.shape}, expected {want}"
                    )
                if not mat.is_zero():
                    df[n] = mat
        c = ChainComplex(ring, tuple(sorted(rk.items())), tuple(sorted(df.items())))
        if validate:
            c.validate()
        return c

    @staticmethod
    def zero_complex(ring: Ring) -> "ChainComplex":
        return ChainComplex.build(ring, {}, {})

    @cached_property
    def _rank_map(self):
        return dict(self.ranks)

    @cached_property
    def _diff_map(self):
        return dict(self.diffs)

    def rank(self, n: int) -> int:
        return self._rank_map.get(n, 0)

    def diff(self, n: int) -> Matrix:
        got = self._diff_map.get(n)
        if got is not None:
            return got
        return Matrix.zero(self.ring, self.rank(n - 1), self.rank(n))

    def degrees(self) -> tuple:
        return tuple(n for n, _ in self.ranks)

    @property
    def total_rank(self) -> int:
        return sum(r for _, r in self.ranks)

    @property
    def min_degree(self):
        return self.ranks[0][0] if self.ranks else None

    @property
    def max_degree(self):
        return self.ranks[-1][0] if self.ranks else None

    def validate(self) -> None:
        for n, _ in self.diffs:
            comp = self.diff(n - 1) @ self.diff(n)
            if not comp.is_zero():
                raise ValueError(f"boundary twice is nonzero from degree {n}")

    def describe(self) -> str:
        if not self.ranks:
            return "0"
        return " ".join(f"{n}:{r}" for n, r in self.ranks)


@dataclass(frozen=True)
class GradedMap:
    """Degree-homogeneous map between complexes, one block per degree.

    blocks is a sorted tuple of (degree, matrix) pairs; the block in
    slot n maps source degree n to target degree n + degree.  Zero
    blocks are never stored.
    """

    source: ChainComplex
    target: ChainComplex
    degree: int
    blocks: tuple

    @staticmethod
    def build(source, target, degree, blocks) -> "GradedMap":
        if source.ring != target.ring:
            raise ShapeMismatch("source and target live over different rings")
        items = blocks.items() if isinstance(blocks, dict) else blocks
        bl = {}
        for n, mat in items:
            n = int(n)
            if mat.ring != source.ring:
                raise ShapeMismatch(f"block in degree {n} uses the wrong ring")
            want = (target.rank(n + degree), source.rank(n))
            if mat.shape != want:
                raise ShapeMismatch(
                    f"block in degree {n} has shape {mat.shape}, expected {want}"
                )
            if not mat.is_zero():
                bl[n] = mat
        return GradedMap(source, target, int(degree), tuple(sorted(bl.items())))

    @staticmethod
    def zero(source, target, degree=0) -> "GradedMap":
        return GradedMap.build(source, target, degree, {})

    @staticmethod
    def identity(c: ChainComplex) -> "GradedMap":
        return GradedMap.build(
            c, c, 0, {n: Matrix.identity(c.ring, r) for n, r in c.ranks}
        )

    @cached_property
    def _block_map(self):
        return dict(self.blocks)

    def block(self, n: int) -> Matrix:
        got = self._block_map.get(n)
        if got is not None:
            return got
        return Matrix.zero(self.source.ring, self.target.rank(n + self.degree), self.source.rank(n))

    def is_zero(self) -> bool:
        return not self.blocks

    def _require_parallel(self, other: "GradedMap") -> None:
        if (self.source, self.target, self.degree) != (other.source, other.target, other.degree):
            raise ShapeMismatch("maps are not parallel")

    def __add__(self, other: "GradedMap") -> "GradedMap":
        self._require_parallel(other)
        out = {}
        for n in set(self._block_map) | set(other._block_map):
            out[n] = self.block(n) + other.block(n)
        return GradedMap.build(self.source, self.target, self.degree, out)

    def __sub__(self, other: "GradedMap") -> "GradedMap":
        return self + (-other)

    def __neg__(self) -> "GradedMap":
        return GradedMap.build(
            self.source, self.target, self.degree,
            {n: -m for n, m in self.blocks},
        )

    def scale(self, c) -> "GradedMap":
        return GradedMap.build(
            self.source, self.target, self.degree,
            {n: m.scale(c) for n, m in self.blocks},
        )

    def compose(self, other: "GradedMap") -> "GradedMap":
        """self after other."""
        if other.target != self.source:
            raise ShapeMismatch("composition needs other.target == self.source")
        deg = self.degree + other.degree
        out = {}
        for n in other.source.degrees():
            m = self.block(n + other.degree) @ other.block(n)
            out[n] = m
        return GradedMap.build(other.source, self.target, deg, out)

    def __matmul__(self, other: "GradedMap") -> "GradedMap":
        if not isinstance(other, GradedMap):
            return NotImplemented
        return self.compose(other)

    def leibniz(self) -> "GradedMap":
        """Graded differential df; chain maps are the maps with df == 0."""
        sign = 1 if self.degree % 2 == 0 else -1
        out = {}
        for n in self.source.degrees():
            term = self.target.diff(n + self.degree) @ self.block(n)
            corr = (self.block(n - 1) @ self.source.diff(n)).scale(sign)
            out[n] = term - corr
        return GradedMap.build(self.source, self.target, self.degree - 1, out)

    def is_chain_map(self) -> bool:
        return self.leibniz().is_zero()


def _require_chain_map(f: GradedMap, degree=None, what="map"):
    if degree is not None and f.degree != degree:
        raise ValueError(f"{what} must have degree {degree}, got {f.degree}")
    if not f.is_chain_map():
        raise ValueError(f"{what} does not commute with the boundaries")


# ---------------------------------------------------------------------------
# Homology


@dataclass(frozen=True)
class HomologySummary:
    """Invariant-factor description of one homology module.

    Over Z: free rank betti plus cyclic pieces Z/t for t in torsion
    (each dividing the next).  Over a field: betti is the dimension and
    torsion is empty.  Over Z/m with m composite the module is a finite
    abelian group recorded entirely in torsion, and betti is 0.
    """

    betti: int
    torsion: tuple
    modulus: int | None = None

    def is_trivial(self) -> bool:
        return self.betti == 0 and not self.torsion

    def describe(self) -> str:
        parts = []
        if self.betti:
            parts.append(f"free^{self.betti}")
        parts.extend(f"cyclic({t})" for t in self.torsion)
        return " + ".join(parts) if parts else "0"


def homology_at(c: ChainComplex, n: int) -> HomologySummary:
    ring = c.ring
    modulus = ring.modulus if ring.kind == "Zmod" else None
    if c.rank(n) == 0:
        return HomologySummary(0, (), modulus)
    if ring.is_field():
        cycles = kernel_basis(c.diff(n)).cols
        image = matrix_rank(c.diff(n + 1))
        return HomologySummary(cycles - image, (), modulus)
    if ring.kind == "Z":
        cycles = kernel_basis(c.diff(n))
        in_cycle_coords = solve_linear(cycles, c.diff(n + 1))
        if in_cycle_coords is None:
            raise AssertionError("boundaries fell outside the cycle lattice")
        snf = smith_normal_form(in_cycle_coords)
        betti = cycles.cols - snf.rank
        torsion = tuple(int(x) for x in snf.invariant_factors if x != 1)
        return HomologySummary(betti, torsion, None)
    # Z/m with composite m: compare the cycle lattice with the lattice
    # spanned by boundaries together with m times everything.
    m = ring.modulus
    basis = kernel_lattice_basis_mod(c.diff(n).to_ring(ZZ), m)
    cn = c.rank(n)
    gens = c.diff(n + 1).to_ring(ZZ).hstack(Matrix.identity(ZZ, cn).scale(m))
    coords = solve_linear(basis, gens)
    if coords is None:
        raise AssertionError("boundaries fell outside the cycle lattice mod m")
    factors = smith_normal_form(coords).diagonal
    if any(x == 0 for x in factors):
        raise AssertionError("homology mod m came out infinite")
    torsion = tuple(int(x) for x in factors if x != 1)
    return HomologySummary(0, torsion, m)


def homology(c: ChainComplex) -> dict:
    return {n: homology_at(c, n) for n in c.degrees()}


def is_acyclic(c: ChainComplex) -> bool:
    return all(homology_at(c, n).is_trivial() for n in c.degrees())


def same_homology(a: ChainComplex, b: ChainComplex) -> bool:
    degrees = set(a.degrees()) | set(b.degrees())
    for n in degrees:
        ha, hb = homology_at(a, n), homology_at(b, n)
        if (ha.betti, ha.torsion) != (hb.betti, hb.torsion):
            return False
    return True


# ---------------------------------------------------------------------------
# Null-homotopies


def leibniz_system(src: ChainComplex, tgt: ChainComplex, degree: int):
    """Matrix of the graded differential acting on degree-`degree` maps.

    Returns (a, var_ns, var_size, eq_ns).  Columns of a correspond to
    the stacked row-major vectorizations of the blocks in var_ns; rows
    to the vectorized blocks of the resulting degree-(degree - 1) map
    in eq_ns.  Kernel vectors of a are precisely the chain conditions,
    and solving a x == vec(f) finds preimages under d.
    """
    ring = src.ring
    ns = list(src.degrees())
    var_size = {n: tgt.rank(n + degree) * src.rank(n) for n in ns}
    active = [n for n in ns if var_size[n] > 0]
    sign = 1 if degree % 2 == 0 else -1
    strips = []
    eq_ns = []
    for n in ns:
        eq_rows = tgt.rank(n + degree - 1) * src.rank(n)
        if eq_rows == 0:
            continue
        if active:
            pieces = []
            for k in active:
                if k == n:
                    pieces.append(kron(tgt.diff(n + degree), Matrix.identity(ring, src.rank(n))))
                elif k == n - 1:
                    blk = kron(
                        Matrix.identity(ring, tgt.rank(n + degree - 1)),
                        src.diff(n).transpose(),
                    )
                    pieces.append(blk.scale(-sign))
                else:
                    pieces.append(Matrix.zero(ring, eq_rows, var_size[k]))
            strip = pieces[0]
            for p in pieces[1:]:
                strip = strip.hstack(p)
        else:
            strip = Matrix.zero(ring, eq_rows, 0)
        strips.append(strip)
        eq_ns.append(n)
    total_vars = sum(var_size[k] for k in active)
    if strips:
        a = strips[0]
        for s in strips[1:]:
            a = a.vstack(s)
    else:
        a = Matrix.zero(ring, 0, total_vars)
    return a, active, var_size, eq_ns


def graded_map_from_vector(src, tgt, degree, active, var_size, x) -> GradedMap:
    """Reassemble a GradedMap from a stacked coefficient column vector."""
    blocks = {}
    offset = 0
    for n in active:
        size = var_size[n]
        blocks[n] = unvec_row_major(
            x.rows_slice(offset, offset + size), tgt.rank(n + degree), src.rank(n)
        )
        offset += size
    return GradedMap.build(src, tgt, degree, blocks)


def find_null_homotopy(f: GradedMap):
    """Solve dH == f for H of degree f.degree + 1, or return None.

    Raises ValueError when df != 0, since dH is always a cycle.
    """
    if not f.leibniz().is_zero():
        raise ValueError("df is nonzero, so no H with dH == f can exist")
    src, tgt, d = f.source, f.target, f.degree
    a, active, var_size, eq_ns = leibniz_system(src, tgt, d + 1)
    if not eq_ns:
        return GradedMap.zero(src, tgt, d + 1)
    rhs = [vec_row_major(f.block(n)) for n in eq_ns]
    b = rhs[0]
    for r in rhs[1:]:
        b = b.vstack(r)
    x = solve_linear(a, b)
    if x is None:
        return None
    h = graded_map_from_vector(src, tgt, d + 1, active, var_size, x)
    if h.leibniz() != f:
        raise AssertionError("solver produced a wrong homotopy")
    return h


def find_contraction(c: ChainComplex):
    """Homotopy k with dk == identity, or None when c is not contractible."""
    return find_null_homotopy(GradedMap.identity(c))


def is_contractible(c: ChainComplex) -> bool:
    return find_contraction(c) is not None


def witness_left_compose(h: GradedMap, witness: GradedMap) -> GradedMap:
    """Turn dW == f into a witness for h after f, for a chain map h."""
    _require_chain_map(h, what="left factor")
    sign = 1 if h.degree % 2 == 0 else -1
    return (h @ witness).scale(sign)


def witness_right_compose(witness: GradedMap, k: GradedMap) -> GradedMap:
    """Turn dW == f into a witness for f after k, for a chain map k."""
    _require_chain_map(k, what="right factor")
    return witness @ k


# ---------------------------------------------------------------------------
# Standard constructions


def suspend(c: ChainComplex, k: int = 1) -> ChainComplex:
    """Shift degrees up by k and scale boundaries by (-1)^k."""
    sign = 1 if k % 2 == 0 else -1
    ranks = {n + k: r for n, r in c.ranks}
    diffs = {n + k: m.scale(sign) for n, m in c.diffs}
    return ChainComplex.build(c.ring, ranks, diffs, validate=False)


def shift_unsigned(c: ChainComplex, k: int) -> ChainComplex:
    """Shift degrees up by k without touching the boundaries."""
    ranks = {n + k: r for n, r in c.ranks}
    diffs = {n + k: m for n, m in c.diffs}
    return ChainComplex.build(c.ring, ranks, diffs, validate=False)


@dataclass(frozen=True)
class DirectSumData:
    complex: ChainComplex
    inclusions: tuple
    projections: tuple


def direct_sum(*parts: ChainComplex) -> DirectSumData:
    if not parts:
        raise ValueError("direct_sum needs at least one summand")
    ring = parts[0].ring
    if any(p.ring != ring for p in parts):
        raise ShapeMismatch("summands live over different rings")
    degrees = sorted({n for p in parts for n in p.degrees()})
    ranks = {n: sum(p.rank(n) for p in parts) for n in degrees}
    diffs = {}
    for n in degrees:
        grid = []
        for i, pi in enumerate(parts):
            row = []
            for j, pj in enumerate(parts):
                if i == j:
                    row.append(pi.diff(n))
                else:
                    row.append(Matrix.zero(ring, pi.rank(n - 1), pj.rank(n)))
            grid.append(row)
        diffs[n] = _grid_to_matrix(ring, grid)
    total = ChainComplex.build(ring, ranks, diffs, validate=False)
    inclusions = []
    projections = []
    for i, p in enumerate(parts):
        inc = {}
        prj = {}
        for n in p.degrees():
            before = sum(q.rank(n) for q in parts[:i])
            eye = Matrix.identity(ring, p.rank(n))
            top = Matrix.zero(ring, before, p.rank(n))
            bot = Matrix.zero(ring, total.rank(n) - before - p.rank(n), p.rank(n))
            inc[n] = top.vstack(eye).vstack(bot)
        for n in total.degrees():
            before = sum(q.rank(n) for q in parts[:i])
            eye = Matrix.identity(ring, p.rank(n))
            left = Matrix.zero(ring, p.rank(n), before)
            right = Matrix.zero(ring, p.rank(n), total.rank(n) - before - p.rank(n))
            prj[n] = left.hstack(eye).hstack(right)
        inclusions.append(GradedMap.build(p, total, 0, inc))
        projections.append(GradedMap.build(total, p, 0, prj))
    return DirectSumData(total, tuple(inclusions), tuple(projections))


def _grid_to_matrix(ring, grid):
    out = None
    for row in grid:
        strip = row[0]
        for blk in row[1:]:
            strip = strip.hstack(blk)
        out = strip if out is None else out.vstack(strip)
    return out if out is not None else Matrix.zero(ring, 0, 0)


@dataclass(frozen=True)
class ConeData:
    """Mapping cone of a chain map f: A -> B.

    The degree-n piece is A_(n-1) + B_n with boundary
    [[-dA, 0], [-f, dB]].  inclusion embeds B as a subcomplex;
    projection reads off the A coordinate and is a degree -1 cycle.
    """

    complex: ChainComplex
    inclusion: GradedMap
    projection: GradedMap


def cone(f: GradedMap) -> ConeData:
    _require_chain_map(f, degree=0, what="cone input")
    a, b = f.source, f.target
    ring = a.ring
    degrees = sorted({n for n in b.degrees()} | {n + 1 for n in a.degrees()})
    ranks = {n: a.rank(n - 1) + b.rank(n) for n in degrees}
    diffs = {}
    for n in degrees:
        top = (-a.diff(n - 1)).hstack(Matrix.zero(ring, a.rank(n - 2), b.rank(n)))
        bot = (-f.block(n - 1)).hstack(b.diff(n))
        diffs[n] = top.vstack(bot)
    cx = ChainComplex.build(ring, ranks, diffs, validate=True)
    incl = {}
    for n in b.degrees():
        incl[n] = Matrix.zero(ring, a.rank(n - 1), b.rank(n)).vstack(
            Matrix.identity(ring, b.rank(n))
        )
    proj = {}
    for n in cx.degrees():
        proj[n] = Matrix.identity(ring, a.rank(n - 1)).hstack(
            Matrix.zero(ring, a.rank(n - 1), b.rank(n))
        )
    inclusion = GradedMap.build(b, cx, 0, incl)
    projection = GradedMap.build(cx, a, -1, proj)
    if not inclusion.is_chain_map():
        raise AssertionError("cone inclusion failed to be a chain map")
    if not projection.leibniz().is_zero():
        raise AssertionError("cone projection failed to be a cycle")
    return ConeData(cx, inclusion, projection)


@dataclass(frozen=True)
class CylinderData:
    """Mapping cylinder of f: A -> B with its structure maps.

    The degree-n piece is A_n + A_(n-1) + B_n.  incl_source and
    incl_target are the two end inclusions, proj collapses onto B,
    quotient kills the source end and identifies the rest with the
    cone, and homotopy witnesses identity versus incl_target after
    proj.
    """

    complex: ChainComplex
    cone: ConeData
    incl_source: GradedMap
    incl_target: GradedMap
    proj: GradedMap
    quotient: GradedMap
    homotopy: GradedMap


def cylinder(f: GradedMap) -> CylinderData:
    _require_chain_map(f, degree=0, what="cylinder input")
    a, b = f.source, f.target
    ring = a.ring
    cn = cone(f)
    degrees = sorted(
        {n for n in a.degrees()} | {n + 1 for n in a.degrees()} | set(b.degrees())
    )
    ranks = {n: a.rank(n) + a.rank(n - 1) + b.rank(n) for n in degrees}
    diffs = {}
    for n in degrees:
        an, an1, bn = a.rank(n), a.rank(n - 1), b.rank(n)
        am1, am2, bm1 = a.rank(n - 1), a.rank(n - 2), b.rank(n - 1)
        row1 = a.diff(n).hstack(Matrix.identity(ring, an1)).hstack(Matrix.zero(ring, am1, bn))
        row2 = (
            Matrix.zero(ring, am2, an)
            .hstack(-a.diff(n - 1))
            .hstack(Matrix.zero(ring, am2, bn))
        )
        row3 = (
            Matrix.zero(ring, bm1, an)
            .hstack(-f.block(n - 1))
            .hstack(b.diff(n))
        )
        diffs[n] = row1.vstack(row2).vstack(row3)
    cx = ChainComplex.build(ring, ranks, diffs, validate=True)
    j1 = {}
    for n in a.degrees():
        an = a.rank(n)
        j1[n] = (
            Matrix.identity(ring, an)
            .vstack(Matrix.zero(ring, a.rank(n - 1), an))
            .vstack(Matrix.zero(ring, b.rank(n), an))
        )
    j2 = {}
    for n in b.degrees():
        bn = b.rank(n)
        j2[n] = (
            Matrix.zero(ring, a.rank(n), bn)
            .vstack(Matrix.zero(ring, a.rank(n - 1), bn))
            .vstack(Matrix.identity(ring, bn))
        )
    pr = {}
    for n in cx.degrees():
        pr[n] = (
            f.block(n)
            .hstack(Matrix.zero(ring, b.rank(n), a.rank(n - 1)))
            .hstack(Matrix.identity(ring, b.rank(n)))
        )
    qt = {}
    for n in cx.degrees():
        width = a.rank(n - 1) + b.rank(n)
        qt[n] = Matrix.zero(ring, width, a.rank(n)).hstack(
            Matrix.identity(ring, width)
        )
    ht = {}
    for n in cx.degrees():
        an, an1, bn = a.rank(n), a.rank(n - 1), b.rank(n)
        up_a = a.rank(n + 1)
        block = (
            Matrix.zero(ring, up_a, an)
            .hstack(Matrix.zero(ring, up_a, an1))
            .hstack(Matrix.zero(ring, up_a, bn))
        )
        mid = (
            Matrix.identity(ring, an)
            .hstack(Matrix.zero(ring, an, an1))
            .hstack(Matrix.zero(ring, an, bn))
        )
        low = (
            Matrix.zero(ring, b.rank(n + 1), an)
            .hstack(Matrix.zero(ring, b.rank(n + 1), an1))
            .hstack(Matrix.zero(ring, b.rank(n + 1), bn))
        )
        ht[n] = block.vstack(mid).vstack(low)
    incl_source = GradedMap.build(a, cx, 0, j1)
    incl_target = GradedMap.build(b, cx, 0, j2)
    proj = GradedMap.build(cx, b, 0, pr)
    quotient = GradedMap.build(cx, cn.complex, 0, qt)
    homotopy = GradedMap.build(cx, cx, 1, ht)
    for m_, name in (
        (incl_source, "source end"),
        (incl_target, "target end"),
        (proj, "projection"),
        (quotient, "quotient"),
    ):
        if not m_.is_chain_map():
            raise AssertionError(f"cylinder {name} failed to be a chain map")
    want = GradedMap.identity(cx) - incl_target @ proj
    if homotopy.leibniz() != want:
        raise AssertionError("cylinder homotopy does not witness the deformation")
    return CylinderData(cx, cn, incl_source, incl_target, proj, quotient, homotopy)


# ---------------------------------------------------------------------------
# Pushouts along levelwise split injections


@dataclass(frozen=True)
class PushoutData:
    """Pushout of Z <-g- A -f-> Y where every f_n is a split injection.

    complex is the pushout W, from_target embeds Y, from_other embeds
    Z, and the stored complements describe how Y splits over A.
    """

    complex: ChainComplex
    along: GradedMap
    attached: GradedMap
    from_target: GradedMap
    from_other: GradedMap
    complements: tuple

    def complement(self, n: int) -> Matrix:
        for k, m in self.complements:
            if k == n:
                return m
        y = self.along.target
        return Matrix.zero(y.ring, y.rank(n), self.complex.rank(n) - self.attached.target.rank(n))


def pushout_along_cofibration(f: GradedMap, g: GradedMap) -> PushoutData:
    _require_chain_map(f, degree=0, what="cofibration")
    _require_chain_map(g, degree=0, what="attaching map")
    if f.source != g.source:
        raise ShapeMismatch("pushout legs must share a source")
    a, y, z = f.source, f.target, g.target
    ring = a.ring
    splits = {}
    for n in y.degrees():
        got = split_with_complement(f.block(n))
        if got is None:
            raise ValueError(f"map is not a split injection in degree {n}")
        splits[n] = got
    degrees = sorted(set(y.degrees()) | set(z.degrees()))
    kcols = {}
    for n in degrees:
        kcols[n] = splits[n][1].cols if n in splits else 0
    ranks = {n: z.rank(n) + kcols[n] for n in degrees}

    def _ra(n):
        if n in splits:
            return splits[n][0]
        return Matrix.zero(ring, a.rank(n), y.rank(n))

    def _kk(n):
        if n in splits:
            return splits[n][1]
        return Matrix.zero(ring, y.rank(n), 0)

    def _pk(n):
        if n in splits:
            return splits[n][2]
        return Matrix.zero(ring, 0, y.rank(n))

    diffs = {}
    for n in degrees:
        topright = g.block(n - 1) @ _ra(n - 1) @ y.diff(n) @ _kk(n)
        botright = _pk(n - 1) @ y.diff(n) @ _kk(n)
        top = z.diff(n).hstack(topright)
        bot = Matrix.zero(ring, kcols.get(n - 1, 0), z.rank(n)).hstack(botright)
        diffs[n] = top.vstack(bot)
    w = ChainComplex.build(ring, ranks, diffs, validate=True)
    inc_z = {}
    for n in z.degrees():
        inc_z[n] = Matrix.identity(ring, z.rank(n)).vstack(
            Matrix.zero(ring, kcols.get(n, 0), z.rank(n))
        )
    inc_y = {}
    for n in y.degrees():
        inc_y[n] = (g.block(n) @ _ra(n)).vstack(_pk(n))
    from_other = GradedMap.build(z, w, 0, inc_z)
    from_target = GradedMap.build(y, w, 0, inc_y)
    if not from_other.is_chain_map() or not from_target.is_chain_map():
        raise AssertionError("pushout structure maps failed to be chain maps")
    if from_target @ f != from_other @ g:
        raise AssertionError("pushout square does not commute")
    comps = tuple(sorted((n, splits[n][1]) for n in splits))
    return PushoutData(w, f, g, from_target, from_other, comps)


def pushout_factor(data: PushoutData, u: GradedMap, w_map: GradedMap) -> GradedMap:
    """Unique chain map h out of the pushout with h after from_other == u
    and h after from_target == w_map, given a commuting cocone (u, w_map)."""
    _require_chain_map(u, degree=0, what="cocone leg from the attached complex")
    _require_chain_map(w_map, degree=0, what="cocone leg from the ambient complex")
    if u.source != data.from_other.source or w_map.source != data.from_target.source:
        raise ShapeMismatch("cocone legs start at the wrong complexes")
    if u.target != w_map.target:
        raise ShapeMismatch("cocone legs end at different complexes")
    if u @ data.attached != w_map @ data.along:
        raise ValueError("cocone does not commute over the shared source")
    blocks = {}
    for n in data.complex.degrees():
        blocks[n] = u.block(n).hstack(w_map.block(n) @ data.complement(n))
    h = GradedMap.build(data.complex, u.target, 0, blocks)
    if not h.is_chain_map():
        raise AssertionError("pushout factorization failed to be a chain map")
    if h @ data.from_other != u or h @ data.from_target != w_map:
        raise AssertionError("pushout factorization missed the cocone")
    return h


# ---------------------------------------------------------------------------
# Short exact sequences


@dataclass(frozen=True)
class SESData:
    """Levelwise split short exact sequence of complexes.

    incl and proj are chain maps; section and retraction are degreewise
    only.  The stored identities are

        proj @ incl == 0            proj @ section == identity
        retraction @ incl == identity
        incl @ retraction + section @ proj == identity
        retraction @ section == 0
    """

    incl: GradedMap
    proj: GradedMap
    section: GradedMap
    retraction: GradedMap

    @property
    def sub(self) -> ChainComplex:
        return self.incl.source

    @property
    def middle(self) -> ChainComplex:
        return self.incl.target

    @property
    def quotient(self) -> ChainComplex:
        return self.proj.target


def validate_ses(incl: GradedMap, proj: GradedMap) -> SESData:
    """Check exactness degreewise and return the splitting data.

    Raises ValueError when the pair is not a levelwise split short
    exact sequence of free modules.
    """
    _require_chain_map(incl, degree=0, what="sub inclusion")
    _require_chain_map(proj, degree=0, what="quotient projection")
    if incl.target != proj.source:
        raise ShapeMismatch("inclusion target differs from projection source")
    x, y, z = incl.source, incl.target, proj.target
    if not (proj @ incl).is_zero():
        raise ValueError("projection after inclusion is nonzero")
    ring = y.ring
    section = {}
    retraction = {}
    for n in y.degrees():
        if x.rank(n) + z.rank(n) != y.rank(n):
            raise ValueError(f"ranks do not add up in degree {n}")
        t = is_split_surjection(proj.block(n))
        if t is None:
            raise ValueError(f"projection is not split surjective in degree {n}")
        residual = Matrix.identity(ring, y.rank(n)) - t @ proj.block(n)
        rho = solve_linear(incl.block(n), residual)
        if rho is None:
            raise ValueError(f"sequence is not exact in degree {n}")
        if rho @ incl.block(n) != Matrix.identity(ring, x.rank(n)):
            raise ValueError(f"inclusion is not split injective in degree {n}")
        if not t.is_zero():
            section[n] = t
        if not rho.is_zero():
            retraction[n] = rho
    return SESData(
        incl,
        proj,
        GradedMap.build(z, y, 0, section),
        GradedMap.build(y, x, 0, retraction),
    )


@dataclass(frozen=True)
class RotatedSES:
    """Rotation of a short exact sequence one step to the left.

    The quotient, shifted down with negated boundary, becomes the new
    sub; the old middle becomes the new quotient; the new middle is the
    old sub plus an acyclic padding complex.  connecting is the chain
    map realizing the boundary morphism of the long exact sequence on
    the shifted quotient.
    """

    ses: SESData
    connecting: GradedMap
    padding: ChainComplex


def rotate_ses(data: SESData) -> RotatedSES:
    x, y, z = data.sub, data.middle, data.quotient
    ring = y.ring
    t, rho = data.section, data.retraction
    # The section fails to be a chain map by a boundary-commutator that
    # lands in the sub; pulling it back gives the connecting map.
    dt = t.leibniz()
    gamma_blocks = {}
    for n in z.degrees():
        got = solve_linear(data.incl.block(n - 1), dt.block(n))
        if got is None:
            raise AssertionError("section commutator escaped the subcomplex")
        gamma_blocks[n] = got
    down = suspend(z, -1)
    gamma = GradedMap.build(down, x, 0, {n - 1: m for n, m in gamma_blocks.items()})
    if not gamma.is_chain_map():
        raise AssertionError("connecting map failed to be a chain map")
    pad = cone(GradedMap.identity(down))
    summed = direct_sum(x, pad.complex)
    new_incl_blocks = {}
    for n in down.degrees():
        zn1 = down.rank(n)  # this is rank of Z in degree n + 1
        zn = z.rank(n)
        top = gamma.block(n)
        mid = Matrix.zero(ring, zn, zn1)
        bot = Matrix.identity(ring, zn1)
        new_incl_blocks[n] = top.vstack(mid).vstack(bot)
    new_proj_blocks = {}
    for n in summed.complex.degrees():
        left = data.incl.block(n)
        midp = t.block(n)
        right = -(data.incl.block(n) @ gamma.block(n))
        new_proj_blocks[n] = left.hstack(midp).hstack(right)
    new_incl = GradedMap.build(down, summed.complex, 0, new_incl_blocks)
    new_proj = GradedMap.build(summed.complex, y, 0, new_proj_blocks)
    rotated = validate_ses(new_incl, new_proj)
    return RotatedSES(rotated, gamma, pad.complex)


# ---------------------------------------------------------------------------
# Homology equivalences, tested without cones


def is_homology_equivalence(f: GradedMap) -> bool:
    """Decide whether a chain map induces isomorphisms on all homology.

    Works degree by degree: the homology modules must agree, and the
    induced map must be surjective; finitely generated modules over Z
    or a field admit no proper surjective self-maps, so the two checks
    together give bijectivity.  Composite moduli are rejected.
    """
    _require_chain_map(f, degree=0, what="map")
    ring = f.source.ring
    if ring.kind == "Zmod" and not ring.is_field():
        raise ValueError("homology equivalence over composite Z/m is not supported")
    src, tgt = f.source, f.target
    for n in sorted(set(src.degrees()) | set(tgt.degrees())):
        hs, ht = homology_at(src, n), homology_at(tgt, n)
        if (hs.betti, hs.torsion) != (ht.betti, ht.torsion):
            return False
        if ht.is_trivial():
            continue
        ks = kernel_basis(src.diff(n))
        kt = kernel_basis(tgt.diff(n))
        induced = solve_linear(kt, f.block(n) @ ks)
        if induced is None:
            raise AssertionError("cycles were not carried into cycles")
        bt = solve_linear(kt, tgt.diff(n + 1))
        if bt is None:
            raise AssertionError("boundaries escaped the cycle lattice")
        aug = induced.hstack(bt)
        if ring.kind == "Z":
            snf = smith_normal_form(aug)
            onto = snf.rank == kt.cols and all(x == 1 for x in snf.invariant_factors)
        else:
            onto = matrix_rank(aug) == kt.cols
        if not onto:
            return False
    return True
