"""Syndrome reconciliation: code construction, decoding, transcripts."""

import hashlib
import io
import itertools

import numpy as np
import pytest

from loraskg import (
    BchCode,
    default_codes,
    pick_code,
    reconcile,
    syndrome,
    verification_digest,
)
from loraskg.pipeline import PreliminaryKey
from loraskg.reconcile import (
    TranscriptRecord,
    read_transcript_csv,
    transcript_record,
    write_transcript_csv,
)
from loraskg.bitutil import hex_to_bits

TABLE = ((127, 78, 7), (127, 50, 13), (127, 29, 21), (127, 15, 27))


def random_block(rng, n=127):
    return rng.integers(0, 2, n).astype(np.uint8)


def inject(rng, block, weight):
    out = block.copy()
    out[rng.choice(block.size, size=weight, replace=False)] ^= 1
    return out


@pytest.fixture(scope="module")
def codes():
    return {c.t: c for c in default_codes()}


class TestCodeConstruction:
    def test_configured_instances(self, codes):
        got = sorted((c.n, c.k, c.t) for c in codes.values())
        assert got == sorted(TABLE)

    def test_code_id_format(self, codes):
        assert codes[7].code_id == "bch(127,78,7)"
        assert codes[27].code_id == "bch(127,15,27)"

    def test_generator_degree_is_redundancy(self, codes):
        for c in codes.values():
            assert len(c.generator) - 1 == c.n - c.k
            assert c.generator[0] == 1 and c.generator[-1] == 1

    def test_unconfigured_field_size_rejected(self):
        with pytest.raises(ValueError, match="primitive polynomial"):
            BchCode(m=8, t=2)

    def test_wrong_expected_k_rejected(self):
        with pytest.raises(ValueError, match="expected"):
            BchCode(m=7, t=7, expected_k=64)


class TestSyndrome:
    def test_codewords_have_zero_syndrome(self, codes):
        # oracle: encode independently by polynomial convolution
        rng = np.random.default_rng(0)
        for c in codes.values():
            for _ in range(10):
                msg = rng.integers(0, 2, c.k).astype(np.uint8)
                word = np.convolve(msg, c.generator) % 2
                assert word.size == c.n
                assert np.array_equal(c.encode(msg), word)
                assert not c.syndrome(word).any()

    def test_matches_dense_parity_matrix(self, codes):
        # oracle: H from unit-vector syndromes, then syndrome(x) = H x mod 2
        rng = np.random.default_rng(1)
        c = codes[13]
        cols = []
        for i in range(c.n):
            unit = np.zeros(c.n, np.uint8)
            unit[i] = 1
            cols.append(c.syndrome(unit))
        h = np.stack(cols, axis=1)
        for _ in range(20):
            x = random_block(rng)
            assert np.array_equal(c.syndrome(x), (h @ x) % 2)

    def test_linearity(self, codes):
        rng = np.random.default_rng(2)
        for c in codes.values():
            a, b = random_block(rng), random_block(rng)
            assert np.array_equal(
                c.syndrome(a ^ b), c.syndrome(a) ^ c.syndrome(b)
            )

    def test_key_prefix_used(self, codes):
        rng = np.random.default_rng(3)
        bits = rng.integers(0, 2, 128).astype(np.uint8)
        key = PreliminaryKey(bits=bits, party="alice", block_index=0)
        c = codes[7]
        assert np.array_equal(syndrome(key, c), c.syndrome(bits[:127]))

    def test_length_checked(self, codes):
        with pytest.raises(ValueError, match="length"):
            codes[7].syndrome(np.zeros(64, np.uint8))
        with pytest.raises(ValueError, match="syndrome length"):
            codes[7].decode_error(np.zeros(10, np.uint8))


class TestDecode:
    def test_exhaustive_weight_up_to_two(self, codes):
        c = codes[7]
        zero = np.zeros(c.n, np.uint8)
        assert c.decode_error(c.syndrome(zero)).size == 0
        for i in range(c.n):
            e = zero.copy()
            e[i] = 1
            pos = c.decode_error(c.syndrome(e))
            assert pos.tolist() == [i]
        for i, j in itertools.combinations(range(c.n), 2):
            e = zero.copy()
            e[i] = e[j] = 1
            pos = c.decode_error(c.syndrome(e))
            assert sorted(pos.tolist()) == [i, j]

    def test_random_patterns_to_capacity(self, codes):
        rng = np.random.default_rng(4)
        for c in codes.values():
            for _ in range(25):
                w = int(rng.integers(0, c.t + 1))
                e = np.zeros(c.n, np.uint8)
                e[rng.choice(c.n, size=w, replace=False)] = 1
                pos = c.decode_error(c.syndrome(e))
                assert pos is not None
                assert sorted(pos.tolist()) == np.flatnonzero(e).tolist()

    def test_beyond_capacity_not_silently_wrong(self, codes):
        # weight > t must either report failure or return some valid
        # coset leader; it must never return the injected pattern as-is
        rng = np.random.default_rng(5)
        c = codes[7]
        for w in (c.t + 1, c.t + 2, c.t + 3):
            for _ in range(20):
                e = np.zeros(c.n, np.uint8)
                e[rng.choice(c.n, size=w, replace=False)] = 1
                pos = c.decode_error(c.syndrome(e))
                if pos is not None:
                    assert pos.size <= c.t


class TestReconcile:
    def test_within_capacity_recovers_alice(self, codes):
        rng = np.random.default_rng(6)
        for c in codes.values():
            alice = random_block(rng)
            bob = inject(rng, alice, c.t)
            res = reconcile(bob, c.syndrome(alice), c, verification_digest(alice))
            assert res.success
            assert np.array_equal(res.key, alice)
            assert res.corrected_errors == c.t
            assert res.leakage_bits == c.n - c.k

    def test_equal_blocks_zero_corrections(self, codes):
        rng = np.random.default_rng(7)
        c = codes[27]
        alice = random_block(rng)
        res = reconcile(alice.copy(), c.syndrome(alice), c)
        assert res.success and res.corrected_errors == 0

    def test_padded_key_uses_prefix(self, codes):
        rng = np.random.default_rng(8)
        c = codes[7]
        alice = rng.integers(0, 2, 128).astype(np.uint8)
        bob = alice.copy()
        bob[3] ^= 1
        bob[127] ^= 1  # outside the code, must be ignored
        res = reconcile(bob, c.syndrome(alice[:127]), c)
        assert res.success
        assert np.array_equal(res.key, alice[:127])
        assert res.corrected_errors == 1

    def test_digest_catches_miscorrection(self, codes):
        # error = part of a codeword support: the decoder "corrects" the
        # complementary low-weight part and lands on the wrong block
        c = codes[7]
        g = np.zeros(c.n, np.uint8)
        g[: len(c.generator)] = c.generator
        supp = np.flatnonzero(g)
        assert supp.size > 2 * c.t  # split leaves > t on the injected side
        e = np.zeros(c.n, np.uint8)
        e[supp[: supp.size - c.t]] = 1
        alice = random_block(np.random.default_rng(9))
        bob = alice ^ e
        syn = c.syndrome(alice)
        blind = reconcile(bob, syn, c)
        assert blind.success and not np.array_equal(blind.key, alice)
        checked = reconcile(bob, syn, c, verification_digest(alice))
        assert not checked.success
        assert checked.key is None

    def test_failure_withholds_key(self, codes):
        rng = np.random.default_rng(10)
        c = codes[7]
        alice = random_block(rng)
        bob = inject(rng, alice, c.t + 2)
        res = reconcile(bob, c.syndrome(alice), c, verification_digest(alice))
        assert not res.success
        assert res.key is None and res.corrected_errors is None
        assert res.leakage_bits == c.n - c.k

    def test_short_key_rejected(self, codes):
        with pytest.raises(ValueError, match="shorter"):
            reconcile(np.zeros(64, np.uint8), np.zeros(49, np.uint8), codes[7])


class TestPickCode:
    def test_rate_examples(self):
        assert pick_code(0.05).k == 78
        assert pick_code(7 / 127).k == 78
        assert pick_code(0.06).k == 50
        assert pick_code(0.11).k == 29
        assert pick_code(0.20).k == 15
        assert pick_code(27 / 127).k == 15

    def test_monotone_in_cutoff(self):
        cutoffs = [0.01, 0.04, 7 / 127, 0.08, 13 / 127, 0.12, 21 / 127, 0.2, 27 / 127]
        ks = [pick_code(c).k for c in cutoffs]
        assert ks == sorted(ks, reverse=True)

    def test_out_of_range(self):
        for bad in (0.0, -0.1, 0.26, 1.0):
            with pytest.raises(ValueError, match="must be in"):
                pick_code(bad)

    def test_uncoverable_cutoff(self):
        with pytest.raises(ValueError, match="no configured code"):
            pick_code(0.22)

    def test_key_length_louver(self):
        with pytest.raises(ValueError, match="no configured code"):
            pick_code(0.05, key_length=64)
        assert pick_code(0.05, key_length=127).n == 127


class TestDigest:
    def test_matches_sha256_prefix(self):
        rng = np.random.default_rng(11)
        bits = rng.integers(0, 2, 127).astype(np.uint8)
        expected = hashlib.sha256(np.packbits(bits).tobytes()).digest()[:4]
        assert verification_digest(bits) == expected

    def test_sensitive_to_single_bit(self):
        bits = np.zeros(127, np.uint8)
        flipped = bits.copy()
        flipped[64] = 1
        assert verification_digest(bits) != verification_digest(flipped)


class TestTranscript:
    def test_round_trip(self, codes):
        rng = np.random.default_rng(12)
        c = codes[13]
        records = []
        for i in range(5):
            rec, _, _ = transcript_record(i, random_block(rng), c)
            records.append(rec)
        buf = io.StringIO()
        write_transcript_csv(records, buf)
        assert read_transcript_csv(buf.getvalue()) == records

    def test_record_is_usable_by_bob(self, codes):
        rng = np.random.default_rng(13)
        c = codes[7]
        alice = random_block(rng)
        rec, syn, digest = transcript_record(3, alice, c)
        assert rec.code_id == c.code_id
        assert np.array_equal(hex_to_bits(rec.syndrome_hex, c.n - c.k), syn)
        assert bytes.fromhex(rec.verify_digest_hex) == digest
        bob = inject(rng, alice, 2)
        res = reconcile(bob, syn, c, digest)
        assert res.success and np.array_equal(res.key, alice)

    def test_header_checked(self):
        with pytest.raises(ValueError, match="header"):
            read_transcript_csv("a,b\n1,2\n")

    def test_syndrome_hex_width(self, codes):
        rng = np.random.default_rng(14)
        for c in codes.values():
            rec, _, _ = transcript_record(0, random_block(rng), c)
            assert len(rec.syndrome_hex) == 2 * ((c.n - c.k + 7) // 8)
            assert len(rec.verify_digest_hex) == 8
