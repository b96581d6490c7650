"""Withings/Nokia Health Mate parser: withings-wiscale.db tables.

Three tables matter: devices (registration/usage metadata incl. MAC
address and battery at last use), measure (scale and BPM readings keyed
by an integer type code), and users (account holder identity). All Health
Mate epochs are millisecond-scale.

The measure table's type codes are not documented by the app; the
fixture-normative default map ships as a config file
(data/measure_codes_v1.txt) and can be replaced at scan time with a
key=value text file, so real-device maps drop in without a code change.
Unknown codes come through as raw hits, never dropped.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..artifacts import (
    ArtifactRecord,
    CONTAINER_SQLITE,
    EpochInstant,
    KIND_BLOOD_PRESSURE,
    KIND_DEVICE_REGISTRATION,
    KIND_RAW_HIT,
    KIND_USER_PROFILE,
    KIND_WEIGHT,
    RawHit,
    looks_like_email,
    make_locator,
    normalize_timestamp,
)
from ..errors import InvalidSpecError, MalformedRowError, ScanError
from ..evidence import AppDataRoot, EvidenceSource, files_under, read_file
from ..sqlite_bytes import connect_bytes, select_rows
from .base import AppParser, ParseResult

PACKAGE_FOLDER = "com.withings.wiscale2"
DISPLAY_NAME = "Health Mate"
DB_NAME = "withings-wiscale.db"
DEFAULT_DB_PATH = f"{PACKAGE_FOLDER}/databases/{DB_NAME}"

MEASUREMENT_KINDS = ("weight", "body-fat", "body-water", "pulse", "bone-mass",
                     "muscle-mass", "bmi", "systolic", "diastolic")

# Composition measurements are scale artifacts; pressure ones come from the
# BPM cuff. The record-level kind tracks that split while the payload keeps
# the exact measurement kind.
_PRESSURE_KINDS = frozenset({"systolic", "diastolic", "pulse"})

_MAC_RE = re.compile(r"^[0-9a-f]{2}(:[0-9a-f]{2}){5}$")


@dataclass(frozen=True)
class DeviceRegistration:
    id: int
    association_date: EpochInstant
    last_use_date: EpochInstant
    modified_date: EpochInstant
    mac_address: str
    firmware: int
    timezone: str | None
    battery_pct: int
    device_type: int
    device_model: int


@dataclass(frozen=True)
class HealthMateMeasurement:
    kind: str
    value: float
    measured_at: EpochInstant
    device_ref: int | None


@dataclass(frozen=True)
class HealthMateUser:
    name: str
    gender: str
    birthday: str
    email: str


def load_code_map(text: str) -> dict[int, str]:
    """Parse a measure code map: one "code = kind" pair per line, # comments."""
    mapping: dict[int, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidSpecError(f"code map line {lineno}: expected 'code = kind'")
        code_s, kind = (part.strip() for part in line.split("=", 1))
        try:
            code = int(code_s)
        except ValueError as exc:
            raise InvalidSpecError(f"code map line {lineno}: bad code {code_s!r}") from exc
        if kind not in MEASUREMENT_KINDS:
            raise InvalidSpecError(f"code map line {lineno}: unknown kind {kind!r}")
        mapping[code] = kind
    return mapping


def _default_code_map() -> dict[int, str]:
    from importlib import resources

    text = (resources.files("phiscan") / "data/measure_codes_v1.txt").read_text()
    return load_code_map(text)


# Fixture-normative measure.type decode table, published as a config file.
DEFAULT_CODE_MAP: dict[int, str] = _default_code_map()


def _require_int(value, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise MalformedRowError(f"{name} is not an integer: {value!r}")
    return value


def _require_instant(value, name: str) -> EpochInstant:
    try:
        return normalize_timestamp(_require_int(value, name))
    except ScanError as exc:
        raise MalformedRowError(f"{name}: {exc}") from exc


def parse_devices(db: bytes, *, package: str = PACKAGE_FOLDER,
                  relative_path: str = DEFAULT_DB_PATH,
                  recovered_at: str = "") -> tuple[list[ArtifactRecord], list[str]]:
    """Device registrations; NULL timezone stays absent, MACs normalize to lowercase."""
    records: list[ArtifactRecord] = []
    warnings: list[str] = []
    with connect_bytes(db) as conn:
        rows = select_rows(
            conn, "devices",
            ["id", "associationDate", "lastUseDate", "modifiedDate", "macAddress",
             "firmware", "timezone", "battery", "type", "model"],
            order_by="id",
        )
    for (rowid, dev_id, assoc, last_use, modified, mac, firmware,
         tz, battery, dev_type, model) in rows:
        detail_id = dev_id if dev_id is not None else rowid
        try:
            mac_norm = str(mac or "").lower()
            if not _MAC_RE.match(mac_norm):
                raise MalformedRowError(f"macAddress not colon-hex: {mac!r}")
            registration = DeviceRegistration(
                id=_require_int(dev_id, "id"),
                association_date=_require_instant(assoc, "associationDate"),
                last_use_date=_require_instant(last_use, "lastUseDate"),
                modified_date=_require_instant(modified, "modifiedDate"),
                mac_address=mac_norm,
                firmware=_require_int(firmware, "firmware"),
                timezone=None if tz is None else str(tz),
                battery_pct=_require_int(battery, "battery"),
                device_type=_require_int(dev_type, "type"),
                device_model=_require_int(model, "model"),
            )
            if not 0 <= registration.battery_pct <= 100:
                raise MalformedRowError(f"battery out of [0,100]: {registration.battery_pct}")
        except MalformedRowError as exc:
            warnings.append(f"devices:{detail_id}: malformed row ({exc}), row skipped")
            continue
        records.append(ArtifactRecord(
            kind=KIND_DEVICE_REGISTRATION,
            payload=registration,
            locator=make_locator(package, relative_path, CONTAINER_SQLITE,
                                 f"devices:{registration.id}"),
            recovered_at=recovered_at,
        ))
    return records, warnings


def parse_measures(db: bytes, code_map: dict[int, str] | None = None, *,
                   package: str = PACKAGE_FOLDER,
                   relative_path: str = DEFAULT_DB_PATH,
                   recovered_at: str = "") -> tuple[list[ArtifactRecord], list[str]]:
    """One record per measure row: typed measurement, or raw hit for unknown codes."""
    if code_map is None:
        code_map = DEFAULT_CODE_MAP
    records: list[ArtifactRecord] = []
    warnings: list[str] = []
    with connect_bytes(db) as conn:
        rows = select_rows(conn, "measure", ["id", "date", "type", "value", "deviceid"],
                           order_by="id")
    for rowid, row_id, date, type_code, value, device_ref in rows:
        detail_id = row_id if row_id is not None else rowid
        locator = make_locator(package, relative_path, CONTAINER_SQLITE,
                               f"measure:{detail_id}")
        try:
            code = _require_int(type_code, "type")
        except MalformedRowError as exc:
            warnings.append(f"measure:{detail_id}: malformed row ({exc}), row skipped")
            continue
        kind = code_map.get(code)
        if kind is None:
            # unknown type code: preserved, never dropped
            records.append(ArtifactRecord(
                kind=KIND_RAW_HIT,
                payload=RawHit(pattern="measure-type-code", value=str(code)),
                locator=locator,
                recovered_at=recovered_at,
            ))
            continue
        try:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise MalformedRowError(f"value is not numeric: {value!r}")
            measurement = HealthMateMeasurement(
                kind=kind,
                value=float(value),
                measured_at=_require_instant(date, "date"),
                device_ref=None if device_ref is None else _require_int(device_ref, "deviceid"),
            )
            if measurement.value <= 0:
                raise MalformedRowError(f"value not positive: {measurement.value}")
        except MalformedRowError as exc:
            warnings.append(f"measure:{detail_id}: malformed row ({exc}), row skipped")
            continue
        records.append(ArtifactRecord(
            kind=KIND_BLOOD_PRESSURE if kind in _PRESSURE_KINDS else KIND_WEIGHT,
            payload=measurement,
            locator=locator,
            recovered_at=recovered_at,
        ))
    return records, warnings


def parse_users(db: bytes, *, package: str = PACKAGE_FOLDER,
                relative_path: str = DEFAULT_DB_PATH,
                recovered_at: str = "") -> tuple[list[ArtifactRecord], list[str]]:
    """Account-holder profiles from the users table."""
    records: list[ArtifactRecord] = []
    warnings: list[str] = []
    with connect_bytes(db) as conn:
        rows = select_rows(conn, "users", ["id", "name", "gender", "birthday", "email"],
                           order_by="id")
    for rowid, row_id, name, gender, birthday, email in rows:
        detail_id = row_id if row_id is not None else rowid
        email_s = "" if email is None else str(email)
        if email_s and not looks_like_email(email_s):
            warnings.append(f"users:{detail_id}: malformed row (bad email {email_s!r}), row skipped")
            continue
        user = HealthMateUser(
            name="" if name is None else str(name),
            gender="" if gender is None else str(gender),
            birthday="" if birthday is None else str(birthday),
            email=email_s,
        )
        records.append(ArtifactRecord(
            kind=KIND_USER_PROFILE,
            payload=user,
            locator=make_locator(package, relative_path, CONTAINER_SQLITE,
                                 f"users:{detail_id}"),
            recovered_at=recovered_at,
        ))
    return records, warnings


class HealthMateParser(AppParser):
    parser_id = "healthmate"
    display_name = DISPLAY_NAME
    folder = PACKAGE_FOLDER
    signature = f"{DB_NAME} present under the app folder"

    def detect(self, root: AppDataRoot, source: EvidenceSource) -> bool:
        if root.package_name != PACKAGE_FOLDER:
            return False
        return any(p.rsplit("/", 1)[-1] == DB_NAME for p in files_under(source, root))

    def parse(self, root: AppDataRoot, source: EvidenceSource, *,
              recovered_at: str = "", code_map: dict[int, str] | None = None) -> ParseResult:
        records: list[ArtifactRecord] = []
        warnings: list[str] = []
        consumed: set[str] = set()
        for db_path in files_under(source, root):
            if db_path.rsplit("/", 1)[-1] != DB_NAME:
                continue
            consumed.add(db_path)
            db = read_file(source, db_path)
            for op, kwargs in ((parse_devices, {}),
                               (parse_measures, {"code_map": code_map}),
                               (parse_users, {})):
                try:
                    recs, warns = op(db, package=root.package_name,
                                     relative_path=db_path, recovered_at=recovered_at,
                                     **kwargs)
                except ScanError as exc:
                    warnings.append(f"{db_path}: {exc}")
                    continue
                records.extend(recs)
                warnings.extend(warns)
        return ParseResult(records=tuple(records), warnings=tuple(warnings),
                           consumed=frozenset(consumed))
