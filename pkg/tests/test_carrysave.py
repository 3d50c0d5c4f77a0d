import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from compsobel.carrysave import (
    BitWord,
    ContractViolation,
    CsPair,
    compress_4_2,
    compress_4_2_words,
    inject_fault,
    lookahead_add,
    lookahead_add_words,
    mask,
    p2pp_compress,
    p2pp_words,
    ppn_compress,
    ppn_words,
    resolve,
    ripple_add,
    ripple_add_words,
    sign_extend,
)


def bw(value, width):
    return BitWord.of(value, width)


# Per-bit reference: evaluates the Boolean cell equations one column at a
# time on plain bit lists, without touching the word-parallel code.
def naive_p2pp(x, y, z, w):
    xb = [(x >> i) & 1 for i in range(w)]
    yb = [(y >> i) & 1 for i in range(w)]
    zb = [(z >> i) & 1 for i in range(w)]
    s = c = 0
    for i in range(w):
        y_prev = yb[i - 1] if i > 0 else 0
        s |= (xb[i] ^ y_prev ^ zb[i]) << i
        if i + 1 < w:
            maj = (xb[i] & y_prev) | (xb[i] & zb[i]) | (y_prev & zb[i])
            c |= maj << (i + 1)
    return s, c


def naive_ppn(x, y, z, w):
    s, c = 0, 1
    for i in range(w):
        xi, yi, zi = (x >> i) & 1, (y >> i) & 1, (z >> i) & 1
        s |= (1 - (xi ^ yi ^ zi)) << i
        nz = 1 - zi
        if i + 1 < w:
            c |= ((xi & yi) | (xi & nz) | (yi & nz)) << (i + 1)
    return s, c


def all_triples(w):
    n = 1 << w
    x, y, z = np.meshgrid(np.arange(n), np.arange(n), np.arange(n), indexing="ij")
    return x.ravel(), y.ravel(), z.ravel()


class TestBitWord:
    def test_wraps_and_interprets(self):
        w = BitWord.of(-3, 5, signed=True)
        assert w.value == 0b11101
        assert w.int == -3
        assert w.uint == 29
        assert str(w) == "0b11101"
        assert w.bits == (1, 0, 1, 1, 1)
        assert BitWord.from_bits(w.bits) == w.as_unsigned()

    def test_invariants_enforced(self):
        with pytest.raises(ContractViolation):
            BitWord(4, 16)
        with pytest.raises(ContractViolation):
            BitWord(0, 0)
        with pytest.raises(ContractViolation):
            BitWord(33, 0)

    @given(st.integers(1, 32), st.integers())
    def test_value_ranges(self, width, raw):
        w = BitWord.of(raw, width, signed=True)
        assert 0 <= w.uint < 2 ** width
        assert -(2 ** (width - 1)) <= w.sint <= 2 ** (width - 1) - 1
        assert w.sint % 2 ** width == raw % 2 ** width

    def test_pair_width_mismatch(self):
        with pytest.raises(ContractViolation):
            CsPair(bw(0, 4), bw(0, 5))


class TestP2PP:
    def test_zero(self):
        pair = p2pp_compress(bw(0, 4), bw(0, 4), bw(0, 4))
        assert (pair.sum.value, pair.carry.value) == (0, 0)

    def test_worked_example(self):
        pair = p2pp_compress(bw(0b00011, 5), bw(0b00101, 5), bw(0b00010, 5))
        assert pair.sum.value == 0b01011
        assert pair.carry.value == 0b00100
        assert pair.total() == 15

    def test_modular_wrap(self):
        pair = p2pp_compress(bw(0b1111, 4), bw(0, 4), bw(0b0001, 4))
        assert pair.sum.value == 0b1110
        assert pair.carry.value == 0b0010
        assert pair.total() == 0

    def test_matches_per_bit_equations_w5(self):
        for x, y, z in zip(*all_triples(5)):
            assert p2pp_words(int(x), int(y), int(z), 5) == naive_p2pp(int(x), int(y), int(z), 5)

    @pytest.mark.parametrize("w", range(2, 9))
    def test_contract_exhaustive(self, w):
        m = mask(w)
        n = 1 << w
        grid_y, grid_z = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
        y, z = grid_y.ravel(), grid_z.ravel()
        for x in range(n):
            s, c = p2pp_words(x, y, z, w)
            assert np.array_equal((s + c) & m, (x + 2 * y + z) & m)
            assert not np.any(c & 1)

    def test_width_mismatch(self):
        with pytest.raises(ContractViolation):
            p2pp_compress(bw(0, 4), bw(0, 5), bw(0, 4))


class TestPPN:
    def test_zero_minus_zero(self):
        pair = ppn_compress(bw(0, 4), bw(0, 4), bw(0, 4))
        assert (pair.sum.value, pair.carry.value) == (0b1111, 0b0001)
        assert pair.total() == 0

    def test_worked_example(self):
        pair = ppn_compress(bw(0b0101, 4), bw(0b0100, 4), bw(0b0010, 4))
        assert pair.sum.value == 0b1100
        assert pair.carry.value == 0b1011
        assert pair.total() == 7

    def test_negative_result(self):
        pair = ppn_compress(bw(0, 4), bw(0, 4), bw(1, 4))
        assert (pair.sum.value, pair.carry.value) == (0b1110, 0b0001)
        assert BitWord.of(pair.total(), 4, signed=True).int == -1

    def test_matches_per_bit_equations_w5(self):
        for x, y, z in zip(*all_triples(5)):
            assert ppn_words(int(x), int(y), int(z), 5) == naive_ppn(int(x), int(y), int(z), 5)

    @pytest.mark.parametrize("w", range(2, 9))
    def test_contract_exhaustive(self, w):
        m = mask(w)
        n = 1 << w
        grid_y, grid_z = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
        y, z = grid_y.ravel(), grid_z.ravel()
        for x in range(n):
            s, c = ppn_words(x, y, z, w)
            assert np.array_equal((s + c) & m, (x + y - z) & m)
            assert np.all(c & 1)

    def test_printed_carry_form_breaks_contract(self):
        # The literal "not Y or X.Y.Z" carry fails the subtraction contract,
        # which is why the majority-with-inverted-subtrahend form is used.
        w = 4
        bad = 0
        for x, y, z in zip(*all_triples(w)):
            x, y, z = int(x), int(y), int(z)
            s = ~(x ^ y ^ z) & mask(w)
            c = 1
            for i in range(w - 1):
                xi, yi, zi = (x >> i) & 1, (y >> i) & 1, (z >> i) & 1
                c |= ((1 - yi) | (xi & yi & zi)) << (i + 1)
            bad += (s + c) & mask(w) != (x + y - z) & mask(w)
        assert bad > 0


class TestCompress42:
    def test_zero(self):
        pair = compress_4_2(*(bw(0, 4),) * 4)
        assert pair.total() == 0

    def test_max_column_sum(self):
        pair = compress_4_2(bw(255, 11), bw(255, 11), bw(255, 11), bw(0, 11))
        assert pair.total() == 1020

    def test_exhaustive_w6(self):
        w, m = 6, mask(6)
        n = 1 << w
        c_grid, d_grid = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
        c, d = c_grid.ravel(), d_grid.ravel()
        for a in range(n):
            for b in range(n):
                s, k = compress_4_2_words(a, b, c, d, w)
                assert np.array_equal((s + k) & m, (a + 2 * b + c - d) & m)

    def test_random_w11(self):
        rng = np.random.default_rng(11)
        a, b, c, d = rng.integers(0, 2 ** 11, size=(4, 100_000))
        s, k = compress_4_2_words(a, b, c, d, 11)
        assert np.array_equal((s + k) & mask(11), (a + 2 * b + c - d) & mask(11))

    def test_resolve(self):
        pair = compress_4_2(bw(10, 11), bw(20, 11), bw(30, 11), bw(100, 11))
        assert resolve(pair).sint == 10 + 40 + 30 - 100
        assert resolve(pair, "lookahead") == resolve(pair)

    def test_width_mismatch(self):
        with pytest.raises(ContractViolation):
            compress_4_2(bw(0, 4), bw(0, 4), bw(0, 4), bw(0, 3))


class TestAdders:
    @pytest.mark.parametrize("add", [ripple_add, lookahead_add])
    def test_zero(self, add):
        r, cout = add(bw(0, 8), bw(0, 8), 0)
        assert (r.value, cout) == (0, 0)

    def test_ripple_full_propagation(self):
        r, cout = ripple_add(bw(255, 8), bw(1, 8), 0)
        assert (r.value, cout) == (0, 1)

    def test_ripple_complement_pair(self):
        r, cout = ripple_add(bw(0x5A, 8), bw(0xA5, 8), 1)
        assert (r.value, cout) == (0x00, 1)

    def test_lookahead_crosses_midpoint(self):
        r, cout = lookahead_add(bw(0b01111111, 8), bw(0b00000001, 8), 0)
        assert (r.value, cout) == (0b10000000, 0)

    def test_lookahead_exhaustive_w8(self):
        a_grid, b_grid = np.meshgrid(np.arange(256), np.arange(256), indexing="ij")
        a, b = a_grid.ravel(), b_grid.ravel()
        for cin in (0, 1):
            r1, c1 = ripple_add_words(a, b, cin, 8)
            r2, c2 = lookahead_add_words(a, b, cin, 8)
            assert np.array_equal(r1, r2)
            assert np.array_equal(c1, c2)
            total = a + b + cin
            assert np.array_equal(r1, total & 0xFF)
            assert np.array_equal(c1, total >> 8)

    @pytest.mark.parametrize("w", range(11, 17))
    def test_lookahead_random_wide(self, w):
        rng = np.random.default_rng(w)
        a, b = rng.integers(0, 2 ** w, size=(2, 20_000))
        cin = rng.integers(0, 2, size=20_000)
        r1, c1 = ripple_add_words(a, b, cin, w)
        r2, c2 = lookahead_add_words(a, b, cin, w)
        assert np.array_equal(r1, r2) and np.array_equal(c1, c2)

    @given(st.integers(1, 32).flatmap(
        lambda w: st.tuples(st.just(w), st.integers(0, 2 ** w - 1),
                            st.integers(0, 2 ** w - 1), st.integers(0, 1))))
    @settings(max_examples=300)
    def test_adders_match_integer_sum(self, case):
        w, a, b, cin = case
        total = a + b + cin
        for add in (ripple_add, lookahead_add):
            r, cout = add(bw(a, w), bw(b, w), cin)
            assert r.value == total % 2 ** w
            assert cout == total >> w

    def test_small_widths_fall_back(self):
        for w in (1, 2, 3):
            for a in range(2 ** w):
                for b in range(2 ** w):
                    assert lookahead_add(bw(a, w), bw(b, w)) == ripple_add(bw(a, w), bw(b, w))

    def test_errors(self):
        with pytest.raises(ContractViolation):
            ripple_add(bw(0, 8), bw(0, 7))
        with pytest.raises(ContractViolation):
            lookahead_add(bw(0, 8), bw(0, 8), 2)


@given(st.integers(2, 16).flatmap(
    lambda w: st.tuples(st.just(w), *(st.integers(0, 2 ** w - 1),) * 4)))
def test_compressors_property(case):
    w, a, b, c, d = case
    m = mask(w)
    assert p2pp_compress(bw(a, w), bw(b, w), bw(c, w)).total() == (a + 2 * b + c) & m
    assert ppn_compress(bw(a, w), bw(b, w), bw(c, w)).total() == (a + b - c) & m
    assert compress_4_2(bw(a, w), bw(b, w), bw(c, w), bw(d, w)).total() == (a + 2 * b + c - d) & m


def test_sign_extend():
    for v in range(-256, 256):
        raw = v & mask(9)
        assert BitWord(11, sign_extend(raw, 9, 11)).sint == v


def test_fault_injection_is_scoped():
    clean = p2pp_words(5, 3, 1, 8)
    with inject_fault("p2pp", 2):
        faulty = p2pp_words(5, 3, 1, 8)
        assert faulty[0] == clean[0] ^ 0b100
        with inject_fault("ppn", 0):
            assert ppn_words(0, 0, 0, 4)[0] == 0b1110
        assert ppn_words(0, 0, 0, 4)[0] == 0b1111
    assert p2pp_words(5, 3, 1, 8) == clean
    with pytest.raises(ValueError):
        with inject_fault("adder", 0):
            pass


def test_random_scalar_agrees_with_vector():
    rnd = random.Random(3)
    for _ in range(200):
        w = rnd.randint(4, 16)
        a, b = rnd.getrandbits(w), rnd.getrandbits(w)
        arr = lookahead_add_words(np.array([a]), np.array([b]), 0, w)[0][0]
        assert lookahead_add(bw(a, w), bw(b, w))[0].value == int(arr)
