"""Tests for mutation actions and the token dictionary."""

import numpy as np
import pytest
from pydantic import ValidationError
from scipy import stats

from src.deepq_fuzz.errors import DegenerateInputError, WindowRangeError
from src.deepq_fuzz.mdp import extract_state
from src.deepq_fuzz.models import ActionKind, ActionSpec, ObjectBounds, default_actions
from src.deepq_fuzz.mutation import (
    TokenDictionary,
    apply_action,
    build_dictionary,
    load_dictionary,
    locate_object_bounds,
    save_dictionary,
)

NO_TOKENS = TokenDictionary()


def spec(kind: ActionKind, **kwargs) -> ActionSpec:
    return ActionSpec(kind=kind, **kwargs)


class TestActionSet:
    """Tests for the default action set."""

    def test_default_enabled(self):
        """Test that eight mutating actions are enabled by default."""
        enabled = [action for action in default_actions() if action.enabled]
        assert len(enabled) == 8
        assert enabled[7].kind is ActionKind.DELETE_WINDOW

    def test_names(self):
        """Test that bit flips are named by their ratio."""
        assert spec(ActionKind.BIT_FLIP, ratio=0.05).name == "bit_flip@0.05"
        assert spec(ActionKind.DELETE_WINDOW).name == "delete_window"

    def test_bit_flip_needs_ratio(self):
        """Test that a bit flip without a valid ratio is rejected."""
        with pytest.raises(ValidationError):
            spec(ActionKind.BIT_FLIP)
        with pytest.raises(ValidationError):
            spec(ActionKind.BIT_FLIP, ratio=1.5)


class TestApplyAction:
    """Tests for the string-rewrite actions."""

    def test_every_default_action_leaves_seed_intact(self, sample_seed, rng):
        """Test that applying actions never changes the seed."""
        pristine = bytes(sample_seed)
        dictionary = build_dictionary([sample_seed])
        window = extract_state(sample_seed, 5000, 32)
        for action in default_actions():
            if action.enabled:
                apply_action(sample_seed, window, action, dictionary, rng)
        assert sample_seed == pristine

    def test_full_bit_flip_inverts_window(self, rng):
        """Test that ratio 1.0 flips every bit inside the window only."""
        data = b"AAAA\x0f\xf0BBBB"
        window = extract_state(data, 4, 2)
        result = apply_action(data, window, spec(ActionKind.BIT_FLIP, ratio=1.0), NO_TOKENS, rng)
        assert result.data == b"AAAA\xf0\x0fBBBB"

    def test_bit_flip_keeps_outside_bytes(self, sample_seed, rng):
        """Test that low-ratio flips only touch the window."""
        window = extract_state(sample_seed, 1000, 32)
        action = spec(ActionKind.BIT_FLIP, ratio=0.05)
        mutant = apply_action(sample_seed, window, action, NO_TOKENS, rng).data
        assert len(mutant) == len(sample_seed)
        assert mutant[:1000] == sample_seed[:1000]
        assert mutant[1032:] == sample_seed[1032:]

    def test_flip_scale_applies_to_ratio(self, rng):
        """Test that the flip scale multiplies the action ratio up to 1."""
        data = b"\x00" * 8
        window = extract_state(data, 0, 8)
        action = spec(ActionKind.BIT_FLIP, ratio=0.5)
        result = apply_action(data, window, action, NO_TOKENS, rng, flip_scale=2.0)
        assert result.data == b"\xff" * 8

    def test_insert_token(self, rng):
        """Test that a dictionary token is inserted inside the window."""
        data = b"0123456789"
        window = extract_state(data, 2, 4)
        dictionary = TokenDictionary(tokens=[b"WXYZ"])
        mutant = apply_action(data, window, spec(ActionKind.INSERT_TOKEN), dictionary, rng).data
        position = mutant.find(b"WXYZ")
        assert len(mutant) == 14
        assert 2 <= position < 6
        assert mutant.replace(b"WXYZ", b"") == data

    def test_insert_with_empty_dictionary_is_noop(self, rng):
        """Test that insert_token with no tokens leaves the input unchanged."""
        data = b"0123456789"
        window = extract_state(data, 0, 4)
        result = apply_action(data, window, spec(ActionKind.INSERT_TOKEN), NO_TOKENS, rng)
        assert result.noop
        assert result.data == data

    def test_shuffle_window_permutes(self, rng):
        """Test that shuffling keeps the window's bytes and the rest of the input."""
        data = b"....abcdefgh...."
        window = extract_state(data, 4, 8)
        mutant = apply_action(data, window, spec(ActionKind.SHUFFLE_WINDOW), NO_TOKENS, rng).data
        assert sorted(mutant[4:12]) == sorted(b"abcdefgh")
        assert mutant[:4] == mutant[12:] == b"...."

    def test_shuffle_object_segments(self, small_doc, rng):
        """Test that segment shuffling stays inside the enclosing object."""
        window = extract_state(small_doc, 10, 4)
        action = spec(ActionKind.SHUFFLE_OBJECT_SEGMENTS)
        mutant = apply_action(small_doc, window, action, NO_TOKENS, rng).data
        assert len(mutant) == len(small_doc)
        assert sorted(mutant[4:25]) == sorted(small_doc[4:25])
        assert mutant[:4] == small_doc[:4]
        assert mutant[25:] == small_doc[25:]

    def test_copy_window_insert(self, rng):
        """Test that the window is copied in and the input grows by its width."""
        data = b"abcdefghij"
        window = extract_state(data, 0, 3)
        action = spec(ActionKind.COPY_WINDOW_INSERT)
        mutant = apply_action(data, window, action, NO_TOKENS, rng).data
        assert len(mutant) == 13
        assert any(
            mutant[p : p + 3] == b"abc" and mutant[:p] + mutant[p + 3 :] == data
            for p in range(11)
        )

    def test_copy_window_overwrite(self, rng):
        """Test that overwriting keeps the input length."""
        data = b"abcdefghij"
        window = extract_state(data, 7, 3)
        action = spec(ActionKind.COPY_WINDOW_OVERWRITE)
        mutant = apply_action(data, window, action, NO_TOKENS, rng).data
        assert len(mutant) == 10
        assert b"hij" in mutant

    def test_same_seed_same_mutant(self, sample_seed):
        """Test that every action is a pure function of the generator state."""
        dictionary = build_dictionary([sample_seed])
        window = extract_state(sample_seed, 5000, 32)
        for action in default_actions():
            if action.enabled:
                results = [
                    apply_action(sample_seed, window, action, dictionary, np.random.default_rng(9))
                    for _ in range(2)
                ]
                assert results[0] == results[1]

    def test_lengths_and_locality_on_random_inputs(self, rng):
        """Test each action's length change and which bytes it may touch."""
        dictionary = TokenDictionary(tokens=[b"TOKEN", b"/Type"])
        for _ in range(200):
            data = rng.integers(0, 256, size=int(rng.integers(20, 200)), dtype=np.uint8).tobytes()
            width = int(rng.integers(1, 16))
            start = int(rng.integers(0, len(data) - width + 1))
            end = start + width
            window = extract_state(data, start, width)
            for action in default_actions():
                if not action.enabled:
                    continue
                mutant = apply_action(data, window, action, dictionary, rng).data
                match action.kind:
                    case ActionKind.BIT_FLIP | ActionKind.SHUFFLE_WINDOW:
                        assert len(mutant) == len(data)
                        assert mutant[:start] == data[:start]
                        assert mutant[end:] == data[end:]
                    case ActionKind.INSERT_TOKEN:
                        grown = len(mutant) - len(data)
                        assert grown == 5
                        assert mutant[:start] == data[:start]
                        assert mutant[end + grown :] == data[end:]
                    case ActionKind.SHUFFLE_OBJECT_SEGMENTS:
                        assert sorted(mutant) == sorted(data)
                    case ActionKind.COPY_WINDOW_OVERWRITE:
                        assert len(mutant) == len(data)
                    case ActionKind.COPY_WINDOW_INSERT:
                        assert len(mutant) == len(data) + width
                        assert window.data in mutant
                    case ActionKind.DELETE_WINDOW:
                        if width < len(data):
                            assert mutant == data[:start] + data[end:]

    def test_shuffle_window_is_uniform(self, rng):
        """Test that all orderings of a window are produced equally often."""
        data = b"abcd"
        window = extract_state(data, 0, 4)
        action = spec(ActionKind.SHUFFLE_WINDOW)
        counts: dict[bytes, int] = {}
        for _ in range(10_000):
            mutant = apply_action(data, window, action, NO_TOKENS, rng).data
            counts[mutant] = counts.get(mutant, 0) + 1
        assert len(counts) == 24
        assert stats.chisquare(list(counts.values())).pvalue > 1e-3

    def test_bit_flip_expected_count(self, rng):
        """Test that a bit flip changes 8 * width * ratio bits on average."""
        data = bytes(range(64))
        window = extract_state(data, 16, 32)
        action = spec(ActionKind.BIT_FLIP, ratio=0.05)
        flips = []
        for _ in range(2000):
            mutant = apply_action(data, window, action, NO_TOKENS, rng).data
            changed = np.frombuffer(mutant, dtype=np.uint8) ^ np.frombuffer(data, dtype=np.uint8)
            flips.append(int(np.unpackbits(changed).sum()))
        assert np.mean(flips) == pytest.approx(8 * 32 * 0.05, abs=0.4)

    def test_delete_window(self, rng):
        """Test that delete_window removes exactly the window."""
        data = b"0123456789"
        window = extract_state(data, 3, 4)
        mutant = apply_action(data, window, spec(ActionKind.DELETE_WINDOW), NO_TOKENS, rng).data
        assert mutant == b"012789"

    def test_delete_whole_input(self, rng):
        """Test that deleting the entire input is refused."""
        data = b"0123"
        window = extract_state(data, 0, 4)
        with pytest.raises(DegenerateInputError):
            apply_action(data, window, spec(ActionKind.DELETE_WINDOW), NO_TOKENS, rng)

    def test_disabled_action(self, rng):
        """Test that a disabled action cannot be applied."""
        window = extract_state(b"0123", 0, 2)
        action = spec(ActionKind.DELETE_WINDOW, enabled=False)
        with pytest.raises(ValueError):
            apply_action(b"0123", window, action, NO_TOKENS, rng)

    def test_window_past_input(self, rng):
        """Test that a window taken from a longer input is rejected."""
        window = extract_state(b"0123456789", 6, 4)
        with pytest.raises(WindowRangeError):
            apply_action(b"01234", window, spec(ActionKind.SHUFFLE_WINDOW), NO_TOKENS, rng)


class TestWindowActions:
    """Tests for observation-control actions."""

    def test_shift_right_to_next_object(self, small_doc, rng):
        """Test that shifting right moves to the next object's open marker."""
        window = extract_state(small_doc, 10, 4)
        result = apply_action(
            small_doc, window, spec(ActionKind.SHIFT_OFFSET_RIGHT), NO_TOKENS, rng
        )
        assert result.data == small_doc
        assert (result.next_offset, result.next_width) == (30, 4)

    def test_shift_left_from_first_object(self, small_doc, rng):
        """Test that shifting left from the first object goes to the start."""
        window = extract_state(small_doc, 10, 4)
        result = apply_action(
            small_doc, window, spec(ActionKind.SHIFT_OFFSET_LEFT), NO_TOKENS, rng
        )
        assert result.next_offset == 0

    def test_grow_and_shrink(self, rng):
        """Test width changes and their clamping."""
        data = b"0123456789"
        grow = apply_action(
            data, extract_state(data, 6, 4), spec(ActionKind.GROW_WIDTH, step=2), NO_TOKENS, rng
        )
        assert (grow.next_offset, grow.next_width) == (4, 6)
        shrink = apply_action(
            data, extract_state(data, 0, 1), spec(ActionKind.SHRINK_WIDTH), NO_TOKENS, rng
        )
        assert shrink.next_width == 1

    def test_flip_ratio_actions(self, rng):
        """Test that ratio actions double or halve the flip scale."""
        data = b"0123"
        window = extract_state(data, 0, 2)
        raised = apply_action(data, window, spec(ActionKind.RAISE_FLIP_RATIO), NO_TOKENS, rng)
        lowered = apply_action(
            data, window, spec(ActionKind.LOWER_FLIP_RATIO), NO_TOKENS, rng, flip_scale=2.0
        )
        assert raised.flip_scale == 2.0
        assert lowered.flip_scale == 1.0
        assert raised.data == lowered.data == data


class TestObjectBounds:
    """Tests for locating the object around an offset."""

    def test_inside_first_object(self, small_doc):
        """Test bounds from the open marker to the end of endobj."""
        assert locate_object_bounds(small_doc, 10) == ObjectBounds(start=4, end=25)

    def test_inside_second_object(self, small_doc):
        """Test bounds of the second object."""
        assert locate_object_bounds(small_doc, 35) == ObjectBounds(start=30, end=46)

    def test_close_marker_is_not_an_opener(self, small_doc):
        """Test that the obj inside endobj does not start a new object."""
        assert locate_object_bounds(small_doc, 23) == ObjectBounds(start=4, end=25)

    def test_no_markers_means_whole_input(self):
        """Test that unbracketed offsets fall back to the whole input."""
        assert locate_object_bounds(b"plain text", 3) == ObjectBounds(start=0, end=10)

    def test_offset_out_of_range(self, small_doc):
        """Test that an offset past the input is rejected."""
        with pytest.raises(WindowRangeError):
            locate_object_bounds(small_doc, len(small_doc))


class TestTokenDictionary:
    """Tests for building and storing the token dictionary."""

    def test_printable_runs(self):
        """Test that maximal printable runs are collected in order."""
        dictionary = build_dictionary([b"ab\x00hello world\x01xyzw\x02hello world"], min_len=4)
        assert dictionary.tokens == [b"hello world", b"xyzw"]

    def test_max_tokens(self):
        """Test that the dictionary is truncated to max_tokens."""
        seed = b"\x00".join(b"tok%03d" % i for i in range(50))
        assert len(build_dictionary([seed], max_tokens=10)) == 10

    def test_zero_max_tokens(self):
        """Test that a zero cap yields an empty dictionary and a negative cap is refused."""
        assert len(build_dictionary([b"hello world"], max_tokens=0)) == 0
        with pytest.raises(ValueError):
            build_dictionary([b"hello world"], max_tokens=-1)

    def test_empty_dictionary_warns(self, caplog):
        """Test that a seed without printable runs yields an empty dictionary."""
        assert len(build_dictionary([b"\x00\x01\x02"])) == 0
        assert "insert_token is a no-op" in caplog.text

    def test_rejects_duplicates_and_binary(self):
        """Test dictionary validation."""
        with pytest.raises(ValidationError):
            TokenDictionary(tokens=[b"abcd", b"abcd"])
        with pytest.raises(ValidationError):
            TokenDictionary(tokens=[b"ab\x00d"])

    def test_save_and_load(self, tmp_path):
        """Test that tokens with backslashes survive a save and load."""
        dictionary = TokenDictionary(tokens=[b"/Type", b"a\\b", b"(x)"])
        path = tmp_path / "tokens.dict"
        save_dictionary(dictionary, path)
        assert load_dictionary(path) == dictionary
