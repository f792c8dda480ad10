import json

import pytest
from hypothesis import given, settings, strategies as st

from tunecore.errors import MalformedLine, MissingVariantKey, NonFiniteMetric, ProtocolError
from tunecore.protocol import (
    DoneEvent,
    ErrorEvent,
    InitCommand,
    ResultEvent,
    SaveCommand,
    SavedEvent,
    StepCommand,
    StopCommand,
    decode_command,
    decode_event,
    encode_command,
    encode_event,
)


class TestEncoding:
    def test_step_command_is_exactly_16_bytes(self):
        data = encode_command(StepCommand())
        assert data == b'{"cmd": "step"}\n'
        assert len(data) == 16

    def test_init_shape(self):
        data = encode_command(InitCommand(trial_id="t1", params={"lr": 0.01}, restore_path=None))
        obj = json.loads(data)
        assert obj == {"cmd": "init", "trial_id": "t1", "params": {"lr": 0.01}, "restore_path": None}

    def test_save_and_stop_shapes(self):
        assert json.loads(encode_command(SaveCommand("/abs/path"))) == {"cmd": "save", "path": "/abs/path"}
        assert json.loads(encode_command(StopCommand())) == {"cmd": "stop"}

    def test_event_shapes(self):
        assert json.loads(encode_event(ResultEvent(1, {"loss": 0.5}))) == {
            "event": "result",
            "step": 1,
            "metrics": {"loss": 0.5},
        }
        assert json.loads(encode_event(SavedEvent("/p"))) == {"event": "saved", "path": "/p"}
        assert json.loads(encode_event(DoneEvent())) == {"event": "done"}
        assert json.loads(encode_event(ErrorEvent("boom"))) == {"event": "error", "message": "boom"}

    def test_every_line_is_newline_terminated_utf8(self):
        for msg in (StepCommand(), StopCommand(), SaveCommand("/p"), InitCommand("t", {}, None)):
            data = encode_command(msg)
            assert data.endswith(b"\n")
            data.decode("utf-8")


class TestDecodeEvent:
    def test_result_round_trip(self):
        line = b'{"event":"result","step":1,"metrics":{"loss":0.5}}\n'
        event = decode_event(line)
        assert event == ResultEvent(step=1, metrics={"loss": 0.5})

    def test_round_trip_bit_exact(self):
        for event in (
            ResultEvent(3, {"loss": 0.123456789012345, "acc": 1.0}),
            SavedEvent("/tmp/ck"),
            DoneEvent(),
            ErrorEvent("x"),
        ):
            assert decode_event(encode_event(event)) == event

    def test_unknown_keys_ignored(self):
        event = decode_event(b'{"event":"result","step":1,"metrics":{"l":1},"extra":42}')
        assert event == ResultEvent(step=1, metrics={"l": 1.0})

    def test_nan_string_metric(self):
        with pytest.raises(NonFiniteMetric):
            decode_event(b'{"event":"result","step":1,"metrics":{"loss":"NaN"}}')

    def test_nan_literal_metric(self):
        with pytest.raises(NonFiniteMetric):
            decode_event(b'{"event":"result","step":1,"metrics":{"loss":NaN}}')

    def test_missing_variant_key(self):
        with pytest.raises(MissingVariantKey):
            decode_event(b'{"step":1}')

    def test_malformed_json(self):
        with pytest.raises(MalformedLine):
            decode_event(b"{nope")

    def test_non_object(self):
        with pytest.raises(MalformedLine):
            decode_event(b"[1,2]")

    def test_unknown_variant(self):
        with pytest.raises(MalformedLine):
            decode_event(b'{"event":"telemetry"}')

    def test_bad_step(self):
        with pytest.raises(MalformedLine):
            decode_event(b'{"event":"result","step":0,"metrics":{}}')
        with pytest.raises(MalformedLine):
            decode_event(b'{"event":"result","step":true,"metrics":{}}')

    @given(st.binary(max_size=120))
    @settings(max_examples=500, deadline=None)
    def test_decode_totality_random_bytes(self, blob):
        try:
            decode_event(blob)
        except ProtocolError:
            pass  # typed errors only; anything else fails the test

    @given(st.text(max_size=120))
    @settings(max_examples=500, deadline=None)
    def test_decode_totality_random_text(self, text):
        try:
            decode_event(text)
        except ProtocolError:
            pass


class TestDecodeCommand:
    def test_all_variants(self):
        assert decode_command(b'{"cmd":"init","trial_id":"t1","params":{},"restore_path":null}') == InitCommand(
            "t1", {}, None
        )
        assert decode_command(b'{"cmd": "step"}') == StepCommand()
        assert decode_command(b'{"cmd":"save","path":"/p"}') == SaveCommand("/p")
        assert decode_command(b'{"cmd":"stop"}') == StopCommand()

    def test_unknown_command_is_protocol_error(self):
        with pytest.raises(MalformedLine):
            decode_command(b'{"cmd":"reboot"}')

    def test_missing_cmd_key(self):
        with pytest.raises(MissingVariantKey):
            decode_command(b'{"event":"done"}')

    def test_command_round_trips(self):
        for cmd in (
            InitCommand("t9", {"a": 1, "b": "x"}, "/restore/me"),
            StepCommand(),
            SaveCommand("/s"),
            StopCommand(),
        ):
            assert decode_command(encode_command(cmd)) == cmd
