#!/usr/bin/env python3
"""Regenerates the bundled test fixtures under tests/data.

Every expected value written here comes from the design tables below, not
from running the library, so the fixtures act as independent oracles.
"""

from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
DATA = ROOT / "tests" / "data"
ALERT_HEADER = "timestamp,sensor,src_ip,src_port,dst_ip,dst_port,attack_type"


def kdd_line(protocol, service, flag, count, src_bytes, label):
    fields = ["0"] * 42
    fields[1], fields[2], fields[3] = protocol, service, flag
    fields[4] = str(int(src_bytes))
    fields[22] = str(int(count))
    fields[41] = label
    return ",".join(fields)


def toy_kdd(rows_per_kind=20):
    out = []
    for i in range(rows_per_kind):
        out.append(kdd_line("tcp", "http", "SF", 1 + i % 5, 200 + 10 * i, "normal."))
        out.append(kdd_line("udp", "domain_u", "SF", 2 + i % 3, 40 + i, "normal."))
        out.append(kdd_line("icmp", "ecr_i", "SF", 400 + i, 1032, "smurf."))
    return out


# name -> (first timestamp, spacing, phase-one clusters as (src_ip, dst_ip, dst_port, size))
AGGREGATION_DESIGN = [
    ("Email_Ehlo", (5, 111, [("202.77.162.213", "172.16.113.148", "25", 5)])),
    ("Sadmind_Ping", (100, 3, [("202.77.162.213", "172.16.115.20", "111", 4),
                               ("202.77.162.213", "172.16.112.50", "111", 4)])),
    ("Sadmind_Amslverify_Overflow", (200, 2, [("202.77.162.213", "172.16.115.20", "32773", 4),
                                              ("202.77.162.213", "172.16.112.50", "32773", 4),
                                              ("202.77.162.213", "172.16.112.10", "32773", 4)])),
    ("Rsh", (300, 2, [("202.77.162.213", "172.16.115.20", "514", 6),
                      ("202.77.162.213", "172.16.112.50", "514", 4)])),
    ("Mstream_Zombie", (400, 1, [("172.16.115.20", "172.16.112.50", "6723", 7),
                                 ("172.16.112.50", "172.16.115.20", "6723", 7)])),
    ("Stream_DoS", (600, 1, [("172.16.115.20", "131.84.1.31", "80", 1)])),
]


def aggregation_fixture():
    rows = []  # (timestamp, line, hyper id)
    for hyper_id, (name, (first, spacing, clusters)) in enumerate(AGGREGATION_DESIGN, start=1):
        queues = [[(c, 1024 + ci)] * c[3] for ci, c in enumerate(clusters)]
        k = 0
        while any(queues):
            for q in queues:
                if q:
                    (src, dst, port, _), src_port = q.pop()
                    t = first + spacing * k
                    rows.append((t, f"{t},sensor1,{src},{src_port},{dst},{port},{name}", hyper_id))
                    k += 1
    rows.sort(key=lambda r: r[0])
    assert len(rows) == 50
    log = [ALERT_HEADER] + [r[1] for r in rows]
    expected = ["id,name,size,phase_one_clusters"]
    for hyper_id, (name, (_, _, clusters)) in enumerate(AGGREGATION_DESIGN, start=1):
        expected.append(f"{hyper_id},{name},{sum(c[3] for c in clusters)},{len(clusters)}")
    assignment = [str(r[2]) for r in rows]
    return log, expected, assignment


def plan_corpus():
    """dos and backdoor share every fourth 10 s window; probe fills the odd ones."""
    out = [ALERT_HEADER]
    for i in range(40):
        t = 10 * i
        if i % 4 == 0:
            out.append(f"{t + 1},h1,10.0.0.5,1000,10.0.0.9,0,dos")
            out.append(f"{t + 3},h2,10.0.0.6,1002,10.0.0.9,4444,backdoor")
        if i % 2 == 1:
            out.append(f"{t + 2},h1,10.0.0.5,1001,10.0.0.9,22,probe")
    return out


def host_stream(index, intrusive):
    out = []
    for i in range(6):
        if intrusive and i == 3:
            record = kdd_line("icmp", "ecr_i", "SF", 420, 1032, "smurf.")
        else:
            record = kdd_line("tcp", "http", "SF", 1 + i % 4, 210 + i, "normal.")
        out.append(f"{1000 + i},10.0.1.{index},10.0.0.9,{record}")
    return out


def write(path, lines):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n")


def main():
    write(DATA / "kdd_toy.csv", toy_kdd())
    log, expected, assignment = aggregation_fixture()
    write(DATA / "alerts_50.csv", log)
    write(DATA / "alerts_50_expected.csv", expected)
    write(DATA / "alerts_50_assignment.txt", assignment)

    scenario = DATA / "scenario"
    write(scenario / "kdd_train.csv", toy_kdd())
    write(scenario / "plan_alerts.csv", plan_corpus())
    hosts = {"host1": False, "host2": False, "host3": True}
    for n, (host, intrusive) in enumerate(hosts.items(), start=1):
        write(scenario / f"{host}.csv", host_stream(n, intrusive))
    write(scenario / "sim.cfg", [
        "# Three-host scenario; the models are trained next to this file.",
        "detector=detector.bn",
        "classifier=classifier.bn",
        "plan=plan.bn",
        "select=max",
        "seed=42",
    ] + [f"host.{h}={h}.csv" for h in hosts])
    write(scenario / "expected.txt", [
        "alerts=1",
        "alert_host=host3",
        "alert_type=dos",
        "step_one=dos",
        "step_two=backdoor",
    ])


if __name__ == "__main__":
    main()
