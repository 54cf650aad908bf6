"""Hypothesis strategies shared by the test modules."""

from hypothesis import strategies as st

from pdivisible.exactnum.matrices import inverse, matmul
from pdivisible.isocrystal import new_isocrystal
from pdivisible.permcrystal import cycle_isocrystal, datum_from_words, to_isocrystal

PRIMES = st.sampled_from([2, 3])


def word(min_len=1, max_len=6):
    return st.text(alphabet="01", min_size=min_len, max_size=max_len)


def words(max_cycles=3, max_total=6):
    return st.lists(word(1, 4), min_size=1, max_size=max_cycles).filter(
        lambda ws: sum(map(len, ws)) <= max_total)


@st.composite
def data(draw, max_cycles=3, max_total=6):
    return datum_from_words(draw(words(max_cycles, max_total)))


@st.composite
def unimodular(draw, n, p):
    """A random element of GL_n(Z_(p)) with small integer entries."""
    m = [[1 if i == j else 0 for j in range(n)] for i in range(n)]
    for _ in range(draw(st.integers(0, 2 * n))):
        i, j = draw(st.integers(0, n - 1)), draw(st.integers(0, n - 1))
        if i != j:
            k = draw(st.integers(-2, 2))
            m[i] = [x + k * y for x, y in zip(m[i], m[j])]
    return m


def conjugate(f, u):
    """The same crystal in another basis of M."""
    a = matmul(u, matmul(f.dense, inverse(u)))
    split = None
    if f.splitting is not None:
        split = [(b.slope, [[sum(u[i][k] * v[k] for k in range(len(v))) for i in range(len(v))]
                            for v in b.basis]) for b in f.splitting.blocks]
    return new_isocrystal(f.p, a, split)


@st.composite
def dieudonne(draw, max_total=5, twist=True):
    """A Dieudonné crystal: an F-cyclic one in a random basis."""
    p = draw(PRIMES)
    f = to_isocrystal(draw(data(max_total=max_total)), p)
    if twist:
        f = conjugate(f, draw(unimodular(f.rank, p)))
    return f


@st.composite
def isoclinic(draw, max_len=6, twist=True, p=None):
    p = draw(PRIMES) if p is None else p
    f = cycle_isocrystal(datum_from_words([draw(word(1, max_len))]), 0, p)
    if twist:
        f = conjugate(f, draw(unimodular(f.rank, p)))
    return f
