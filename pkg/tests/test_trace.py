"""Tests for trace export, parsing, digests and merging."""

import numpy as np

from src.runtime.tag import Tag
from src.runtime.trace import EMPTY_TRACE_DIGEST, Trace, TraceRecord, payload_digest, trace_digest


def test_line_format():
    record = TraceRecord(Tag(130_000_000, 2), "cv.process", (("cv.vehicles", "abcd"),))
    assert record.to_line() == "130000000,2,cv.process,cv.vehicles:abcd"
    assert TraceRecord.from_line(record.to_line()) == record


def test_line_without_writes():
    record = TraceRecord(Tag(5), "a.relay")
    assert record.to_line() == "5,0,a.relay,"
    assert TraceRecord.from_line("5,0,a.relay,") == record


def test_empty_digest():
    assert Trace().digest() == EMPTY_TRACE_DIGEST


def test_digest_depends_on_order():
    a, b = TraceRecord(Tag(1), "x.r"), TraceRecord(Tag(1), "y.r")
    assert trace_digest([a, b]) != trace_digest([b, a])
    assert Trace([a, b]).digest() == trace_digest([a, b])


def test_export_is_line_per_record():
    trace = Trace([TraceRecord(Tag(1), "x.r"), TraceRecord(Tag(2), "y.r")])
    lines = trace.export().splitlines()
    assert lines == ["1,0,x.r,", "2,0,y.r,"]
    assert Trace(TraceRecord.from_line(line) for line in lines) == trace


def test_merge_orders_by_tag_then_platform():
    left = Trace([TraceRecord(Tag(1), "a.r"), TraceRecord(Tag(3), "a.r")])
    right = Trace([TraceRecord(Tag(1), "b.r"), TraceRecord(Tag(2), "b.r")])
    merged = Trace.merge([left, right])
    assert [(r.tag.time, r.reaction) for r in merged] == [(1, "a.r"), (1, "b.r"), (2, "b.r"), (3, "a.r")]


def test_payload_digest():
    assert payload_digest(None) == "-"
    assert payload_digest(b"abc") == payload_digest(bytearray(b"abc"))
    assert len(payload_digest(42)) == 16


def test_single_bit_flips_change_the_digest():
    rng = np.random.default_rng(2024)
    records, payload_bits, time_bits = 20, 16 * 8, 40
    payloads = [rng.bytes(16) for _ in range(records)]
    times = [int(t) for t in rng.integers(0, 2**time_bits, size=records)]

    def build(payloads, times):
        return Trace(
            TraceRecord(Tag(time), f"r{i}.react", ((f"r{i}.out", payload_digest(payload)),))
            for i, (payload, time) in enumerate(zip(payloads, times))
        )

    reference = build(payloads, times).digest()
    # each flip is (record, bit); bits past the payload land in the tag time
    flips = rng.choice(records * (payload_bits + time_bits), size=1000, replace=False)
    digests = set()
    for flip in flips:
        index, bit = divmod(int(flip), payload_bits + time_bits)
        flipped_payloads, flipped_times = list(payloads), list(times)
        if bit < payload_bits:
            data = bytearray(payloads[index])
            data[bit // 8] ^= 1 << (bit % 8)
            flipped_payloads[index] = bytes(data)
        else:
            flipped_times[index] ^= 1 << (bit - payload_bits)
        digests.add(build(flipped_payloads, flipped_times).digest())
    assert reference not in digests
    assert len(digests) == 1000
