"""Run a three-round sequential annotation session end to end.

Each annotator observes the image, reads the merged caption so far, and
contributes only what is missing. The timing ledger reconstructs the total
time; the intrinsic report summarizes units, speed, and duplication.
"""

from annochain import AnnotationSession, Mode, MockGateway, TimingEvent, intrinsic_report


def events(k, start, read_gap=0.0):
    # observe 20 s, then (optionally) read, then produce for 10 s
    return [
        TimingEvent(k, "observe_start", start),
        TimingEvent(k, "observe_end", start + 20.0),
        TimingEvent(k, "output_start", start + 20.0 + read_gap),
        TimingEvent(k, "output_end", start + 30.0 + read_gap),
    ]


gateway = MockGateway()
session = AnnotationSession("images/harbour.jpg", Mode.chain(), gateway)

rounds = [
    "a red boat. the water is blue.",
    "two seagulls. the boat left of the pier.",
    "the pier is wooden.",
]

for k, text in enumerate(rounds, start=1):
    start = (k - 1) * 60.0
    if k > 1:
        prior = session.serve_prior_annotation(f"annotator-{k}", start + 20.0)
        print(f"round {k} reads: {prior!r}")
    session.submit_round(f"annotator-{k}", "speech_transcript", text,
                         events(k, start, read_gap=8.0 if k > 1 else 0.0))
    print(f"round {k} merged: {session.merged_caption!r}\n")

session.finalize("annotator-3")

report = intrinsic_report(session)
print("unit count:   ", report.unit_count)
print("total time:   ", report.total_time_s, "s")
print("speed:        ", round(report.speed_units_per_s, 4), "units/s")
print("duplication:  ", report.duplication_pct, "%")
