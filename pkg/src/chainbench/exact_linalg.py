"""Exact linear algebra over the integers, the rationals, and Z/m.

Everything here is exact: integer matrices hold Python ints, rational
matrices hold fractions.Fraction values, and Z/m matrices store the
canonical representative in range(m).  No floating point is involved
anywhere, so results are reproducible bit for bit.

The workhorses are smith_normal_form (which records the change-of-basis
matrices together with their inverses), solve_linear, and kernel_basis.
On top of those sit the splitting tests for injections and surjections,
which is the interface the chain-level code actually consumes.

Pivot selection in the Smith reduction is pinned: among the nonzero
entries of the remaining block, take one of smallest absolute value,
breaking ties by smallest (row, column).  This makes the returned
normal form data deterministic across runs and platforms.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction


class ShapeMismatch(ValueError):
    """Raised when matrix shapes or base rings do not line up."""


class NonFreeKernel(ValueError):
    """Raised when a kernel over Z/m admits no basis.

    Kernels over a field or over Z are always free.  Over Z/m with m
    composite a kernel can fail to be a free module, in which case no
    basis matrix exists and the caller has to reformulate, typically by
    lifting the computation to Z.
    """


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


@dataclass(frozen=True)
class Ring:
    """Base ring marker: Ring("Z"), Ring("Q"), or Ring("Zmod", m)."""

    kind: str
    modulus: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("Z", "Q", "Zmod"):
            raise ValueError(f"unknown ring kind {self.kind!r}")
        if self.kind == "Zmod":
            if not isinstance(self.modulus, int) or self.modulus < 2:
                raise ValueError("Zmod needs an integer modulus >= 2")
        elif self.modulus is not None:
            raise ValueError(f"ring {self.kind} does not take a modulus")

    def __str__(self) -> str:
        if self.kind == "Zmod":
            return f"Z/{self.modulus}"
        return self.kind

    @property
    def zero(self):
        return Fraction(0) if self.kind == "Q" else 0

    @property
    def one(self):
        return Fraction(1) if self.kind == "Q" else 1

    def normalize(self, x):
        """Coerce x into the canonical representation for this ring."""
        if self.kind == "Z":
            if isinstance(x, Fraction):
                if x.denominator != 1:
                    raise ValueError(f"{x} is not an integer")
                return int(x)
            if isinstance(x, int):
                return x
            raise TypeError(f"cannot treat {x!r} as an integer")
        if self.kind == "Q":
            if isinstance(x, (int, Fraction)):
                return Fraction(x)
            raise TypeError(f"cannot treat {x!r} as a rational")
        if isinstance(x, int):
            return x % self.modulus
        raise TypeError(f"cannot treat {x!r} as an element of {self}")

    def is_field(self) -> bool:
        if self.kind == "Q":
            return True
        if self.kind == "Zmod":
            return _is_prime(self.modulus)
        return False

    def is_unit(self, x) -> bool:
        x = self.normalize(x)
        if self.kind == "Z":
            return x in (1, -1)
        if self.kind == "Q":
            return x != 0
        import math

        return math.gcd(x, self.modulus) == 1

    def invert(self, x):
        """Multiplicative inverse; raises ValueError when x is not a unit."""
        x = self.normalize(x)
        if self.kind == "Z":
            if x in (1, -1):
                return x
            raise ValueError(f"{x} is not a unit in Z")
        if self.kind == "Q":
            if x == 0:
                raise ValueError("0 has no inverse")
            return Fraction(1) / x
        try:
            return pow(x, -1, self.modulus)
        except ValueError:
            raise ValueError(f"{x} is not a unit in {self}") from None


ZZ = Ring("Z")
QQ = Ring("Q")


def Zmod(m: int) -> Ring:
    return Ring("Zmod", m)


@dataclass(frozen=True)
class Matrix:
    """Immutable exact matrix; entries is a tuple of row tuples."""

    ring: Ring
    rows: int
    cols: int
    entries: tuple

    def __post_init__(self) -> None:
        if len(self.entries) != self.rows:
            raise ShapeMismatch(
                f"expected {self.rows} rows, got {len(self.entries)}"
            )
        norm = self.ring.normalize
        fixed = []
        for row in self.entries:
            if len(row) != self.cols:
                raise ShapeMismatch(
                    f"expected {self.cols} columns, got {len(row)}"
                )
            fixed.append(tuple(norm(x) for x in row))
        object.__setattr__(self, "entries", tuple(fixed))

    def __repr__(self) -> str:
        body = [list(row) for row in self.entries]
        return f"Matrix({self.ring}, {self.rows}x{self.cols}, {body})"

    @staticmethod
    def from_rows(ring: Ring, data) -> "Matrix":
        data = [tuple(row) for row in data]
        rows = len(data)
        cols = len(data[0]) if rows else 0
        return Matrix(ring, rows, cols, tuple(data))

    @staticmethod
    def zero(ring: Ring, rows: int, cols: int) -> "Matrix":
        z = ring.zero
        return Matrix(ring, rows, cols, tuple(tuple(z for _ in range(cols)) for _ in range(rows)))

    @staticmethod
    def identity(ring: Ring, n: int) -> "Matrix":
        z, o = ring.zero, ring.one
        return Matrix(
            ring, n, n,
            tuple(tuple(o if i == j else z for j in range(n)) for i in range(n)),
        )

    @staticmethod
    def from_columns(ring: Ring, columns, rows: int) -> "Matrix":
        """Assemble a matrix from an iterable of length-`rows` columns."""
        cols = [tuple(c) for c in columns]
        for c in cols:
            if len(c) != rows:
                raise ShapeMismatch(f"column of length {len(c)}, expected {rows}")
        data = tuple(tuple(c[i] for c in cols) for i in range(rows))
        return Matrix(ring, rows, len(cols), data)

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    @property
    def shape(self):
        return (self.rows, self.cols)

    def is_zero(self) -> bool:
        z = self.ring.zero
        return all(x == z for row in self.entries for x in row)

    def is_square(self) -> bool:
        return self.rows == self.cols

    def _check_same_shape(self, other: "Matrix") -> None:
        if self.ring != other.ring:
            raise ShapeMismatch(f"ring mismatch: {self.ring} vs {other.ring}")
        if self.shape != other.shape:
            raise ShapeMismatch(f"shape mismatch: {self.shape} vs {other.shape}")

    def __add__(self, other: "Matrix") -> "Matrix":
        self._check_same_shape(other)
        data = tuple(
            tuple(a + b for a, b in zip(ra, rb))
            for ra, rb in zip(self.entries, other.entries)
        )
        return Matrix(self.ring, self.rows, self.cols, data)

    def __sub__(self, other: "Matrix") -> "Matrix":
        self._check_same_shape(other)
        data = tuple(
            tuple(a - b for a, b in zip(ra, rb))
            for ra, rb in zip(self.entries, other.entries)
        )
        return Matrix(self.ring, self.rows, self.cols, data)

    def __neg__(self) -> "Matrix":
        data = tuple(tuple(-a for a in row) for row in self.entries)
        return Matrix(self.ring, self.rows, self.cols, data)

    def scale(self, c) -> "Matrix":
        c = self.ring.normalize(c)
        data = tuple(tuple(c * a for a in row) for row in self.entries)
        return Matrix(self.ring, self.rows, self.cols, data)

    def __matmul__(self, other: "Matrix") -> "Matrix":
        if not isinstance(other, Matrix):
            return NotImplemented
        if self.ring != other.ring:
            raise ShapeMismatch(f"ring mismatch: {self.ring} vs {other.ring}")
        if self.cols != other.rows:
            raise ShapeMismatch(
                f"cannot multiply {self.shape} by {other.shape}"
            )
        z = self.ring.zero
        ocols = other.cols
        data = []
        for i in range(self.rows):
            arow = self.entries[i]
            out = []
            for j in range(ocols):
                s = z
                for k in range(self.cols):
                    aik = arow[k]
                    if aik != z:
                        s = s + aik * other.entries[k][j]
                out.append(s)
            data.append(tuple(out))
        return Matrix(self.ring, self.rows, ocols, tuple(data))

    def transpose(self) -> "Matrix":
        data = tuple(
            tuple(self.entries[i][j] for i in range(self.rows))
            for j in range(self.cols)
        )
        return Matrix(self.ring, self.cols, self.rows, data)

    def hstack(self, other: "Matrix") -> "Matrix":
        if self.ring != other.ring or self.rows != other.rows:
            raise ShapeMismatch("hstack needs equal row counts and rings")
        data = tuple(ra + rb for ra, rb in zip(self.entries, other.entries))
        return Matrix(self.ring, self.rows, self.cols + other.cols, data)

    def vstack(self, other: "Matrix") -> "Matrix":
        if self.ring != other.ring or self.cols != other.cols:
            raise ShapeMismatch("vstack needs equal column counts and rings")
        return Matrix(
            self.ring, self.rows + other.rows, self.cols,
            self.entries + other.entries,
        )

    def rows_slice(self, i0: int, i1: int) -> "Matrix":
        return Matrix(self.ring, i1 - i0, self.cols, self.entries[i0:i1])

    def cols_slice(self, j0: int, j1: int) -> "Matrix":
        data = tuple(row[j0:j1] for row in self.entries)
        return Matrix(self.ring, self.rows, j1 - j0, data)

    def select_columns(self, indices) -> "Matrix":
        idx = list(indices)
        data = tuple(tuple(row[j] for j in idx) for row in self.entries)
        return Matrix(self.ring, self.rows, len(idx), data)

    def column(self, j: int) -> "Matrix":
        return self.cols_slice(j, j + 1)

    def to_ring(self, ring: Ring) -> "Matrix":
        """Move entries into another ring where an exact meaning exists.

        Z -> Q and Z -> Z/m are the coefficient changes; Z/m -> Z lifts
        the canonical representatives; Q -> Z requires every entry to be
        integral.
        """
        if ring == self.ring:
            return self
        src, dst = self.ring.kind, ring.kind
        if src == "Z" and dst in ("Q", "Zmod"):
            return Matrix(ring, self.rows, self.cols, self.entries)
        if src == "Zmod" and dst == "Z":
            return Matrix(ring, self.rows, self.cols, self.entries)
        if src == "Q" and dst == "Z":
            for row in self.entries:
                for x in row:
                    if x.denominator != 1:
                        raise ValueError(f"entry {x} is not an integer")
            data = tuple(tuple(int(x) for x in row) for row in self.entries)
            return Matrix(ring, self.rows, self.cols, data)
        raise ValueError(f"no canonical map from {self.ring} to {ring}")


def block_matrix(grid) -> Matrix:
    """Assemble a matrix from a rectangular grid of blocks.

    Every entry of the grid must be a Matrix; block heights must agree
    along each row of the grid and widths along each column.
    """
    if not grid or not grid[0]:
        raise ShapeMismatch("block_matrix needs a nonempty grid")
    ring = grid[0][0].ring
    ncols_blocks = len(grid[0])
    for row in grid:
        if len(row) != ncols_blocks:
            raise ShapeMismatch("ragged block grid")
    out = None
    for row in grid:
        strip = row[0]
        for blk in row[1:]:
            strip = strip.hstack(blk)
        out = strip if out is None else out.vstack(strip)
    if out.ring != ring:
        raise ShapeMismatch("ring mismatch inside block grid")
    return out


def kron(a: Matrix, b: Matrix) -> Matrix:
    """Kronecker product; (i*b.rows + u, j*b.cols + v) entry is a[i,j] * b[u,v]."""
    if a.ring != b.ring:
        raise ShapeMismatch(f"ring mismatch: {a.ring} vs {b.ring}")
    rows = a.rows * b.rows
    cols = a.cols * b.cols
    z = a.ring.zero
    data = []
    for i in range(a.rows):
        for u in range(b.rows):
            row = []
            for j in range(a.cols):
                aij = a.entries[i][j]
                if aij == z:
                    row.extend(z for _ in range(b.cols))
                else:
                    row.extend(aij * b.entries[u][v] for v in range(b.cols))
            data.append(tuple(row))
    return Matrix(a.ring, rows, cols, tuple(data))


def vec_row_major(m: Matrix) -> Matrix:
    """Flatten row by row into a column vector.

    With this convention vec(A @ X @ B) == kron(A, B.transpose()) @ vec(X).
    """
    data = tuple((x,) for row in m.entries for x in row)
    return Matrix(m.ring, m.rows * m.cols, 1, data)


def unvec_row_major(v: Matrix, rows: int, cols: int) -> Matrix:
    if v.cols != 1 or v.rows != rows * cols:
        raise ShapeMismatch(f"cannot reshape {v.shape} into {rows}x{cols}")
    flat = [r[0] for r in v.entries]
    data = tuple(tuple(flat[i * cols + j] for j in range(cols)) for i in range(rows))
    return Matrix(v.ring, rows, cols, data)


@dataclass(frozen=True)
class SNFResult:
    """Smith data:  d == p @ a @ q  with p, q invertible over the ring.

    pinv and qinv are the exact inverses of p and q, accumulated during
    the reduction rather than recomputed afterwards.
    """

    d: Matrix
    p: Matrix
    q: Matrix
    pinv: Matrix
    qinv: Matrix

    @property
    def diagonal(self) -> tuple:
        n = min(self.d.rows, self.d.cols)
        return tuple(self.d.entries[i][i] for i in range(n))

    @property
    def rank(self) -> int:
        z = self.d.ring.zero
        return sum(1 for x in self.diagonal if x != z)

    @property
    def invariant_factors(self) -> tuple:
        z = self.d.ring.zero
        return tuple(x for x in self.diagonal if x != z)


class _SnfWorker:
    """Mutable state for the Smith reduction with tracked elementary ops."""

    def __init__(self, a: Matrix):
        self.ring = a.ring
        self.r = a.rows
        self.c = a.cols
        self.d = [list(row) for row in a.entries]
        self.p = self._eye(self.r)
        self.pinv = self._eye(self.r)
        self.q = self._eye(self.c)
        self.qinv = self._eye(self.c)

    def _eye(self, n):
        z, o = self.ring.zero, self.ring.one
        return [[o if i == j else z for j in range(n)] for i in range(n)]

    def swap_rows(self, i, j):
        if i == j:
            return
        self.d[i], self.d[j] = self.d[j], self.d[i]
        self.p[i], self.p[j] = self.p[j], self.p[i]
        for row in self.pinv:
            row[i], row[j] = row[j], row[i]

    def swap_cols(self, i, j):
        if i == j:
            return
        for row in self.d:
            row[i], row[j] = row[j], row[i]
        for row in self.q:
            row[i], row[j] = row[j], row[i]
        self.qinv[i], self.qinv[j] = self.qinv[j], self.qinv[i]

    def add_row(self, i, j, c):
        """row_i += c * row_j (on d and p); inverse op recorded on pinv."""
        norm = self.ring.normalize
        di, dj = self.d[i], self.d[j]
        for k in range(self.c):
            di[k] = norm(di[k] + c * dj[k])
        pi, pj = self.p[i], self.p[j]
        for k in range(self.r):
            pi[k] = norm(pi[k] + c * pj[k])
        for row in self.pinv:
            row[j] = norm(row[j] - c * row[i])

    def add_col(self, j, i, c):
        """col_j += c * col_i (on d and q); inverse op recorded on qinv."""
        norm = self.ring.normalize
        for row in self.d:
            row[j] = norm(row[j] + c * row[i])
        for row in self.q:
            row[j] = norm(row[j] + c * row[i])
        qi, qj = self.qinv[i], self.qinv[j]
        for k in range(self.c):
            qi[k] = norm(qi[k] - c * qj[k])

    def negate_row(self, i):
        norm = self.ring.normalize
        self.d[i] = [norm(-x) for x in self.d[i]]
        self.p[i] = [norm(-x) for x in self.p[i]]
        for row in self.pinv:
            row[i] = norm(-row[i])

    def scale_row(self, i, u):
        """row_i *= u for a unit u (fields only)."""
        norm = self.ring.normalize
        uinv = self.ring.invert(u)
        self.d[i] = [norm(u * x) for x in self.d[i]]
        self.p[i] = [norm(u * x) for x in self.p[i]]
        for row in self.pinv:
            row[i] = norm(uinv * row[i])

    def result(self) -> SNFResult:
        ring = self.ring
        mk = lambda rows, rr, cc: Matrix(ring, rr, cc, tuple(tuple(r) for r in rows))
        return SNFResult(
            d=mk(self.d, self.r, self.c),
            p=mk(self.p, self.r, self.r),
            q=mk(self.q, self.c, self.c),
            pinv=mk(self.pinv, self.r, self.r),
            qinv=mk(self.qinv, self.c, self.c),
        )


def _abs_key(ring: Ring, x):
    if ring.kind == "Zmod":
        return x
    return abs(x)


def smith_normal_form(a: Matrix) -> SNFResult:
    """Diagonalize with invertible row and column operations.

    Over Z the diagonal is nonnegative with each entry dividing the
    next.  Over a field the diagonal consists of ones followed by
    zeros.  Z/m with composite m is rejected: work with an integer lift
    instead.
    """
    ring = a.ring
    field = ring.is_field()
    if ring.kind == "Zmod" and not field:
        raise ValueError(
            "smith_normal_form over Z/m with composite m is not supported; "
            "lift the problem to Z"
        )
    w = _SnfWorker(a)
    z = ring.zero
    t = 0
    limit = min(w.r, w.c)
    while t < limit:
        best = None
        bi = bj = -1
        for i in range(t, w.r):
            for j in range(t, w.c):
                v = w.d[i][j]
                if v == z:
                    continue
                key = (_abs_key(ring, v), i, j)
                if best is None or key < best:
                    best = key
                    bi, bj = i, j
        if best is None:
            break
        w.swap_rows(t, bi)
        w.swap_cols(t, bj)
        if field:
            w.scale_row(t, ring.invert(w.d[t][t]))
        elif w.d[t][t] < 0:
            w.negate_row(t)
        piv = w.d[t][t]
        restart = False
        for i in range(t + 1, w.r):
            x = w.d[i][t]
            if x == z:
                continue
            if field:
                qq = x  # pivot is 1
            else:
                qq = x // piv
            if qq != z:
                w.add_row(i, t, -qq)
            if w.d[i][t] != z:
                restart = True
        if restart:
            continue
        for j in range(t + 1, w.c):
            x = w.d[t][j]
            if x == z:
                continue
            if field:
                qq = x
            else:
                qq = x // piv
            if qq != z:
                w.add_col(j, t, -qq)
            if w.d[t][j] != z:
                restart = True
        if restart:
            continue
        if not field:
            bad_row = -1
            for i in range(t + 1, w.r):
                if any(w.d[i][j] % piv != 0 for j in range(t + 1, w.c)):
                    bad_row = i
                    break
            if bad_row >= 0:
                # Pull the offending row up so the Euclidean steps see it.
                w.add_row(t, bad_row, ring.one)
                continue
        t += 1
    return w.result()


def _rref(a: Matrix):
    """Reduced row echelon form over a field; returns (rows, pivot columns)."""
    ring = a.ring
    z = ring.zero
    m = [list(row) for row in a.entries]
    pivots = []
    prow = 0
    for col in range(a.cols):
        sel = -1
        for i in range(prow, a.rows):
            if m[i][col] != z:
                sel = i
                break
        if sel < 0:
            continue
        m[prow], m[sel] = m[sel], m[prow]
        inv = ring.invert(m[prow][col])
        m[prow] = [ring.normalize(inv * x) for x in m[prow]]
        for i in range(a.rows):
            if i != prow and m[i][col] != z:
                f = m[i][col]
                mi, mp = m[i], m[prow]
                m[i] = [ring.normalize(xi - f * xp) for xi, xp in zip(mi, mp)]
        pivots.append(col)
        prow += 1
        if prow == a.rows:
            break
    return m, pivots


def _solve_field(a: Matrix, b: Matrix) -> Matrix | None:
    aug = a.hstack(b)
    m, pivots = _rref(aug)
    if any(p >= a.cols for p in pivots):
        return None
    x = [[a.ring.zero] * b.cols for _ in range(a.cols)]
    for idx, p in enumerate(pivots):
        for j in range(b.cols):
            x[p][j] = m[idx][a.cols + j]
    return Matrix(a.ring, a.cols, b.cols, tuple(tuple(r) for r in x))


def _solve_integer(a: Matrix, b: Matrix) -> Matrix | None:
    snf = smith_normal_form(a)
    c = snf.p @ b
    y = [[0] * b.cols for _ in range(a.cols)]
    n = min(a.rows, a.cols)
    for i in range(a.rows):
        di = snf.d.entries[i][i] if i < n else 0
        for j in range(b.cols):
            cij = c.entries[i][j]
            if di == 0:
                if cij != 0:
                    return None
            else:
                if cij % di != 0:
                    return None
                y[i][j] = cij // di
    return snf.q @ Matrix(ZZ, a.cols, b.cols, tuple(tuple(r) for r in y))


def _solve_zmod_composite(a: Matrix, b: Matrix) -> Matrix | None:
    m = a.ring.modulus
    a_lift = a.to_ring(ZZ)
    b_lift = b.to_ring(ZZ)
    aug = a_lift.hstack(Matrix.identity(ZZ, a.rows).scale(m))
    x_full = _solve_integer(aug, b_lift)
    if x_full is None:
        return None
    return x_full.rows_slice(0, a.cols).to_ring(a.ring)


def solve_linear(a: Matrix, b: Matrix) -> Matrix | None:
    """Find any exact x with a @ x == b, or None when no solution exists.

    b may have several columns; each is solved simultaneously.
    """
    if a.ring != b.ring:
        raise ShapeMismatch(f"ring mismatch: {a.ring} vs {b.ring}")
    if a.rows != b.rows:
        raise ShapeMismatch(f"a has {a.rows} rows but b has {b.rows}")
    if a.ring.is_field():
        return _solve_field(a, b)
    if a.ring.kind == "Z":
        return _solve_integer(a, b)
    return _solve_zmod_composite(a, b)


def _kernel_field(a: Matrix) -> Matrix:
    m, pivots = _rref(a)
    pivot_set = set(pivots)
    free = [j for j in range(a.cols) if j not in pivot_set]
    z, o = a.ring.zero, a.ring.one
    columns = []
    for f in free:
        v = [z] * a.cols
        v[f] = o
        for idx, p in enumerate(pivots):
            v[p] = a.ring.normalize(-m[idx][f])
        columns.append(v)
    return Matrix.from_columns(a.ring, columns, a.cols)


def _kernel_integer(a: Matrix) -> Matrix:
    snf = smith_normal_form(a)
    return snf.q.cols_slice(snf.rank, a.cols)


def kernel_lattice_basis_mod(a: Matrix, m: int) -> Matrix:
    """Basis of the lattice {x in Z^cols : a @ x == 0 mod m} for integer a.

    The lattice contains m Z^cols, so it always has full rank and the
    result is a square invertible integer matrix whose columns generate
    exactly the solutions of the congruence system.
    """
    if a.ring != ZZ:
        raise ShapeMismatch("kernel_lattice_basis_mod expects an integer matrix")
    c = a.cols
    aug = a.hstack(Matrix.identity(ZZ, a.rows).scale(m))
    gens = _kernel_integer(aug).rows_slice(0, c)
    snf_g = smith_normal_form(gens)
    cols = []
    for i in range(snf_g.rank):
        di = snf_g.d.entries[i][i]
        cols.append([snf_g.pinv.entries[k][i] * di for k in range(c)])
    basis = Matrix.from_columns(ZZ, cols, c)
    if basis.cols != c:
        raise AssertionError("congruence kernel lattice lost full rank")
    return basis


def _kernel_zmod_composite(a: Matrix) -> Matrix:
    ring = a.ring
    m = ring.modulus
    c = a.cols
    # Integer vectors x with a x == 0 mod m form a full-rank lattice L
    # inside Z^c (it contains m Z^c).  Compute a basis for L, express
    # m Z^c in that basis, and read the quotient off a Smith form.
    basis = kernel_lattice_basis_mod(a.to_ring(ZZ), m)
    coords = _solve_integer(basis, Matrix.identity(ZZ, c).scale(m))
    if coords is None:
        raise AssertionError("m Z^c escaped the kernel lattice")
    snf_c = smith_normal_form(coords)
    factors = snf_c.diagonal
    if any(f == 0 for f in factors):
        raise AssertionError("degenerate quotient in Z/m kernel computation")
    bad = [int(f) for f in factors if f not in (1, m)]
    if bad:
        raise NonFreeKernel(
            f"kernel over {ring} is not free: cyclic pieces of sizes {bad}"
        )
    picked = [i for i, f in enumerate(factors) if f == m]
    generators = (basis @ snf_c.pinv).select_columns(picked)
    return generators.to_ring(ring)


def kernel_basis(a: Matrix) -> Matrix:
    """Columns forming a basis of {x : a @ x == 0}.

    Over Z the basis spans the kernel as a direct summand (it is
    saturated).  Over Z/m with composite m the kernel may fail to be
    free, in which case NonFreeKernel is raised.
    """
    if a.ring.is_field():
        return _kernel_field(a)
    if a.ring.kind == "Z":
        return _kernel_integer(a)
    return _kernel_zmod_composite(a)


def inverse(a: Matrix) -> Matrix | None:
    """Two-sided inverse of a square matrix, or None."""
    if not a.is_square():
        raise ShapeMismatch("only square matrices can be inverted")
    x = solve_linear(a, Matrix.identity(a.ring, a.rows))
    if x is None:
        return None
    if (x @ a) != Matrix.identity(a.ring, a.rows):
        return None
    return x


def is_split_injection(a: Matrix) -> Matrix | None:
    """Retraction r with r @ a == identity, or None when a is not split injective."""
    x = solve_linear(a.transpose(), Matrix.identity(a.ring, a.cols))
    if x is None:
        return None
    return x.transpose()


def is_split_surjection(a: Matrix) -> Matrix | None:
    """Section s with a @ s == identity, or None when a is not split surjective."""
    return solve_linear(a, Matrix.identity(a.ring, a.rows))


def split_with_complement(a: Matrix):
    """Splitting data for a split injection a.

    Returns (r, comp, proj) with

        r @ a == identity            (retraction, compatible with comp)
        a @ r + comp @ proj == identity
        proj @ comp == identity
        r @ comp == 0 and proj @ a == 0

    so the columns of comp complete the image of a to a basis.  Returns
    None when a is not a split injection.
    """
    r0 = is_split_injection(a)
    if r0 is None:
        return None
    comp = kernel_basis(r0)
    t = a.hstack(comp)
    tinv = inverse(t)
    if tinv is None:
        raise AssertionError("image plus complement failed to span")
    r = tinv.rows_slice(0, a.cols)
    proj = tinv.rows_slice(a.cols, t.cols)
    return r, comp, proj


def _det_bareiss(rows) -> int:
    """Fraction-free determinant of an integer matrix given as lists."""
    n = len(rows)
    if n == 0:
        return 1
    m = [list(r) for r in rows]
    sign = 1
    prev = 1
    for k in range(n - 1):
        if m[k][k] == 0:
            swap = -1
            for i in range(k + 1, n):
                if m[i][k] != 0:
                    swap = i
                    break
            if swap < 0:
                return 0
            m[k], m[swap] = m[swap], m[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
            m[i][k] = 0
        prev = m[k][k]
    return sign * m[n - 1][n - 1]


def det(a: Matrix):
    """Exact determinant in the base ring."""
    if not a.is_square():
        raise ShapeMismatch("determinant needs a square matrix")
    if a.ring.kind == "Z":
        return _det_bareiss(a.entries)
    if a.ring.kind == "Zmod":
        return _det_bareiss(a.entries) % a.ring.modulus
    # Rational: eliminate with exact fractions.
    n = a.rows
    m = [list(row) for row in a.entries]
    sign = 1
    out = Fraction(1)
    for k in range(n):
        sel = -1
        for i in range(k, n):
            if m[i][k] != 0:
                sel = i
                break
        if sel < 0:
            return Fraction(0)
        if sel != k:
            m[k], m[sel] = m[sel], m[k]
            sign = -sign
        piv = m[k][k]
        out *= piv
        for i in range(k + 1, n):
            if m[i][k] != 0:
                f = m[i][k] / piv
                m[i] = [xi - f * xk for xi, xk in zip(m[i], m[k])]
    return out * sign


def rank(a: Matrix) -> int:
    """Rank over Z or over a field (not defined for composite Z/m)."""
    if a.ring.is_field():
        return len(_rref(a)[1])
    if a.ring.kind == "Z":
        return smith_normal_form(a).rank
    raise ValueError("rank over Z/m with composite m is not well defined")
