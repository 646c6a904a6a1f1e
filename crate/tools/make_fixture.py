#!/usr/bin/env python3
"""Regenerate assets/fixtures/mini-gtfs.zip.

The archive is built with STORED entries and a fixed timestamp so the bytes
are reproducible. Run from the repository root:

    python3 tools/make_fixture.py
"""

import io
import pathlib
import zipfile

FILES = {
    "agency.txt": (
        "agency_id,agency_name,agency_url,agency_timezone\n"
        "A1,Demo Transit Authority,https://example.org/demo,Europe/Rome\n"
    ),
    "stops.txt": (
        "stop_id,stop_name,stop_lat,stop_lon\n"
        "S1,Central Station,45.0703,7.6869\n"
        "S2,Market Square,45.0711,7.6802\n"
        "S3,River Park,45.0654,7.6935\n"
        "S4,Airport Terminal,45.1996,7.6495\n"
    ),
    "routes.txt": (
        "route_id,agency_id,route_short_name,route_long_name,route_type\n"
        "R1,A1,10,Central - River,3\n"
        "R2,A1,M1,,1\n"
    ),
    "trips.txt": (
        "route_id,service_id,trip_id\n"
        "R1,WK,T1\n"
        "R1,WK,T2\n"
        "R2,WE,T3\n"
    ),
    "stop_times.txt": (
        "trip_id,arrival_time,departure_time,stop_id,stop_sequence\n"
        "T1,08:00:00,08:01:00,S1,1\n"
        "T1,08:10:00,08:11:00,S2,2\n"
        "T1,08:20:00,08:21:00,S3,3\n"
        "T2,17:00:00,17:01:00,S3,1\n"
        "T2,17:12:00,17:13:00,S2,2\n"
        "T2,17:25:00,17:26:00,S1,3\n"
        "T3,23:50:00,23:52:00,S1,1\n"
        "T3,24:10:00,24:12:00,S4,2\n"
    ),
    "calendar.txt": (
        "service_id,monday,tuesday,wednesday,thursday,friday,saturday,sunday,start_date,end_date\n"
        "WK,1,1,1,1,1,0,0,20200101,20201231\n"
        "WE,0,0,0,0,0,1,1,20200101,20201231\n"
    ),
}


def main():
    out = pathlib.Path(__file__).resolve().parent.parent / "assets" / "fixtures" / "mini-gtfs.zip"
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w", zipfile.ZIP_STORED) as zf:
        for name in sorted(FILES):
            info = zipfile.ZipInfo(name, date_time=(1980, 1, 1, 0, 0, 0))
            zf.writestr(info, FILES[name])
    out.write_bytes(buf.getvalue())
    print(f"wrote {out} ({out.stat().st_size} bytes)")


if __name__ == "__main__":
    main()
