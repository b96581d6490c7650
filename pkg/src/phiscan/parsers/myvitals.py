"""iHealth MyVitals parser: androidNin.db tables plus the credential XML.

The app keeps device readings in a SQLite database under
iHealthMyVitals.V2/Databases/androidNin.db and, separately, stores the
account's authentication material (password included, in plaintext) in a
shared-preferences file named sp_user_region_host_info.xml.

Column names for TB_SPO2Result are documented artifacts; the remaining
four tables are bound to the fixture schema below. Real-device schema
drift surfaces as MissingTable/malformed-row warnings, never as a guess.

  TB_BPResult(Sys, Dia, Pulse, MeasureTime, DeviceID, Note, Account)
  TB_WeightOnlineResult(Weight, BMI, BodyFat, BodyWater, MuscleMass,
                        DailyCalorie, BoneMass, MeasureTime, Account)
  TB_TemperatureHumidity(Humidity, Temperature, Lighting, MeasureTime)
  TB_Userinfo(Name, Birthday, TimeZone, Email)
"""

from __future__ import annotations

from dataclasses import dataclass

from ..artifacts import (
    ArtifactRecord,
    CredentialSet,
    EpochInstant,
    KIND_BLOOD_PRESSURE,
    KIND_CREDENTIAL,
    KIND_ENVIRONMENT,
    KIND_OXIMETRY,
    KIND_USER_PROFILE,
    KIND_WEIGHT,
    CONTAINER_SQLITE,
    CONTAINER_XML,
    looks_like_email,
    make_locator,
    normalize_timestamp,
)
from ..errors import (
    MalformedRowError,
    MissingTableError,
    NoCredentialKeysError,
    NotSqliteError,
    ScanError,
)
from ..evidence import AppDataRoot, EvidenceSource, files_under, read_file
from ..shared_prefs import parse_shared_prefs
from ..sqlite_bytes import connect_bytes, select_rows
from .base import AppParser, ParseResult

PACKAGE_FOLDER = "iHealthMyVitals.V2"
DISPLAY_NAME = "iHealth MyVitals"
DB_SUBPATH = "Databases/androidNin.db"
DEFAULT_DB_PATH = f"{PACKAGE_FOLDER}/{DB_SUBPATH}"
CREDENTIAL_XML_NAME = "sp_user_region_host_info.xml"
DEFAULT_XML_PATH = f"{PACKAGE_FOLDER}/shared_prefs/{CREDENTIAL_XML_NAME}"

# Recognized credential key suffixes in sp_user_region_host_info.xml; the
# prefix before each suffix is the account email.
CREDENTIAL_SUFFIXES = {
    "_user_password": "password_plaintext",
    "_user_refresh_token": "refresh_token",
    "_user_access_token": "access_token",
    "_user_region_host_info": "region_host",
    "_user_is_online": "is_online_flag",
}


@dataclass(frozen=True)
class BloodPressureReading:
    systolic: int
    diastolic: int
    pulse: int
    measured_at: EpochInstant
    device_id: str
    note: str | None
    account: str


@dataclass(frozen=True)
class OximetryReading:
    result_spo2: int
    pulse_rate: int
    perfusion_index: float
    measured_at: EpochInstant
    last_change_at: EpochInstant
    phone_created_at: EpochInstant
    health_id: str
    machine_type: str
    machine_device_id: str
    used_user_id: int
    phone_data_id: str


@dataclass(frozen=True)
class WeightReading:
    weight: float
    bmi: float
    body_fat_pct: float
    body_water_pct: float
    muscle_mass: float
    daily_calorie_intake: float
    bone_mass: float
    measured_at: EpochInstant
    account: str


@dataclass(frozen=True)
class EnvironmentReading:
    humidity: float
    temperature: float
    lighting_level: float
    measured_at: EpochInstant


@dataclass(frozen=True)
class MyVitalsProfile:
    name: str
    date_of_birth: str
    timezone_location: str
    email: str


def _require_int(value, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise MalformedRowError(f"{name} is not an integer: {value!r}")
    return value


def _require_num(value, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise MalformedRowError(f"{name} is not numeric: {value!r}")
    return float(value)


def _require_instant(value, name: str) -> EpochInstant:
    try:
        return normalize_timestamp(_require_int(value, name))
    except ScanError as exc:
        raise MalformedRowError(f"{name}: {exc}") from exc


def _text(value) -> str:
    return "" if value is None else str(value)


def parse_bp_results(db: bytes, *, package: str = PACKAGE_FOLDER,
                     relative_path: str = DEFAULT_DB_PATH,
                     recovered_at: str = "") -> tuple[list[ArtifactRecord], list[str]]:
    """One blood-pressure record per TB_BPResult row; bad rows are tallied."""
    records: list[ArtifactRecord] = []
    warnings: list[str] = []
    with connect_bytes(db) as conn:
        rows = select_rows(conn, "TB_BPResult",
                           ["Sys", "Dia", "Pulse", "MeasureTime", "DeviceID", "Note", "Account"])
    for rowid, sys_v, dia_v, pulse_v, mtime, device_id, note, account in rows:
        if None in (sys_v, dia_v, pulse_v, mtime):
            warnings.append(f"TB_BPResult:{rowid}: null vital columns, row skipped")
            continue
        try:
            reading = BloodPressureReading(
                systolic=_require_int(sys_v, "Sys"),
                diastolic=_require_int(dia_v, "Dia"),
                pulse=_require_int(pulse_v, "Pulse"),
                measured_at=_require_instant(mtime, "MeasureTime"),
                device_id=_text(device_id),
                note=None if note is None else str(note),
                account=_text(account),
            )
            if not (reading.systolic > reading.diastolic > 0):
                raise MalformedRowError(
                    f"systolic/diastolic out of order: {reading.systolic}/{reading.diastolic}"
                )
            if reading.pulse <= 0:
                raise MalformedRowError(f"pulse not positive: {reading.pulse}")
        except MalformedRowError as exc:
            warnings.append(f"TB_BPResult:{rowid}: malformed row ({exc}), row skipped")
            continue
        records.append(ArtifactRecord(
            kind=KIND_BLOOD_PRESSURE,
            payload=reading,
            locator=make_locator(package, relative_path, CONTAINER_SQLITE,
                                 f"TB_BPResult:{rowid}"),
            recovered_at=recovered_at,
        ))
    return records, warnings


def parse_spo2_results(db: bytes, *, package: str = PACKAGE_FOLDER,
                       relative_path: str = DEFAULT_DB_PATH,
                       recovered_at: str = "") -> tuple[list[ArtifactRecord], list[str]]:
    """Oximetry records from TB_SPO2Result, ordered by MeasureTime ascending."""
    records: list[ArtifactRecord] = []
    warnings: list[str] = []
    with connect_bytes(db) as conn:
        rows = select_rows(
            conn, "TB_SPO2Result",
            ["UsedUserID", "PhoneDataID", "iHealthID", "MachineType", "MachineDeviceID",
             "MeasureTime", "LastChangeTime", "PhoneCreateTime", "Result", "PR", "PI"],
            order_by="MeasureTime, rowid",
        )
    for (rowid, used_user, phone_data, health_id, machine_type, machine_dev,
         mtime, ctime, ptime, result, pr, pi) in rows:
        if None in (result, pr, pi, mtime):
            warnings.append(f"TB_SPO2Result:{rowid}: null vital columns, row skipped")
            continue
        try:
            reading = OximetryReading(
                result_spo2=_require_int(result, "Result"),
                pulse_rate=_require_int(pr, "PR"),
                perfusion_index=_require_num(pi, "PI"),
                measured_at=_require_instant(mtime, "MeasureTime"),
                last_change_at=_require_instant(ctime, "LastChangeTime"),
                phone_created_at=_require_instant(ptime, "PhoneCreateTime"),
                health_id=_text(health_id),
                machine_type=_text(machine_type),
                machine_device_id=_text(machine_dev),
                used_user_id=_require_int(used_user if used_user is not None else 0, "UsedUserID"),
                phone_data_id=_text(phone_data),
            )
            if not 0 < reading.result_spo2 <= 100:
                raise MalformedRowError(f"Result out of range: {reading.result_spo2}")
            if reading.pulse_rate <= 0:
                raise MalformedRowError(f"PR not positive: {reading.pulse_rate}")
            if reading.perfusion_index < 0:
                raise MalformedRowError(f"PI negative: {reading.perfusion_index}")
        except MalformedRowError as exc:
            warnings.append(f"TB_SPO2Result:{rowid}: malformed row ({exc}), row skipped")
            continue
        records.append(ArtifactRecord(
            kind=KIND_OXIMETRY,
            payload=reading,
            locator=make_locator(package, relative_path, CONTAINER_SQLITE,
                                 f"TB_SPO2Result:{rowid}"),
            recovered_at=recovered_at,
        ))
    return records, warnings


def parse_weight_results(db: bytes, *, package: str = PACKAGE_FOLDER,
                         relative_path: str = DEFAULT_DB_PATH,
                         recovered_at: str = "") -> tuple[list[ArtifactRecord], list[str]]:
    """Scale readings from TB_WeightOnlineResult."""
    records: list[ArtifactRecord] = []
    warnings: list[str] = []
    with connect_bytes(db) as conn:
        rows = select_rows(
            conn, "TB_WeightOnlineResult",
            ["Weight", "BMI", "BodyFat", "BodyWater", "MuscleMass",
             "DailyCalorie", "BoneMass", "MeasureTime", "Account"],
        )
    for (rowid, weight, bmi, fat, water, muscle, calorie, bone, mtime, account) in rows:
        if None in (weight, bmi, fat, water, muscle, calorie, bone, mtime):
            warnings.append(f"TB_WeightOnlineResult:{rowid}: null vital columns, row skipped")
            continue
        try:
            reading = WeightReading(
                weight=_require_num(weight, "Weight"),
                bmi=_require_num(bmi, "BMI"),
                body_fat_pct=_require_num(fat, "BodyFat"),
                body_water_pct=_require_num(water, "BodyWater"),
                muscle_mass=_require_num(muscle, "MuscleMass"),
                daily_calorie_intake=_require_num(calorie, "DailyCalorie"),
                bone_mass=_require_num(bone, "BoneMass"),
                measured_at=_require_instant(mtime, "MeasureTime"),
                account=_text(account),
            )
            if reading.weight <= 0:
                raise MalformedRowError(f"Weight not positive: {reading.weight}")
            for pct_name, pct in (("BodyFat", reading.body_fat_pct),
                                  ("BodyWater", reading.body_water_pct)):
                if not 0 <= pct <= 100:
                    raise MalformedRowError(f"{pct_name} out of [0,100]: {pct}")
        except MalformedRowError as exc:
            warnings.append(f"TB_WeightOnlineResult:{rowid}: malformed row ({exc}), row skipped")
            continue
        records.append(ArtifactRecord(
            kind=KIND_WEIGHT,
            payload=reading,
            locator=make_locator(package, relative_path, CONTAINER_SQLITE,
                                 f"TB_WeightOnlineResult:{rowid}"),
            recovered_at=recovered_at,
        ))
    return records, warnings


def parse_environment(db: bytes, *, package: str = PACKAGE_FOLDER,
                      relative_path: str = DEFAULT_DB_PATH,
                      recovered_at: str = "") -> tuple[list[ArtifactRecord], list[str]]:
    """Scale environment rows (humidity, temperature, lighting)."""
    records: list[ArtifactRecord] = []
    warnings: list[str] = []
    with connect_bytes(db) as conn:
        rows = select_rows(conn, "TB_TemperatureHumidity",
                           ["Humidity", "Temperature", "Lighting", "MeasureTime"])
    for rowid, humidity, temperature, lighting, mtime in rows:
        if None in (humidity, temperature, lighting, mtime):
            warnings.append(f"TB_TemperatureHumidity:{rowid}: null columns, row skipped")
            continue
        try:
            reading = EnvironmentReading(
                humidity=_require_num(humidity, "Humidity"),
                temperature=_require_num(temperature, "Temperature"),
                lighting_level=_require_num(lighting, "Lighting"),
                measured_at=_require_instant(mtime, "MeasureTime"),
            )
            if not 0 <= reading.humidity <= 100:
                raise MalformedRowError(f"Humidity out of [0,100]: {reading.humidity}")
        except MalformedRowError as exc:
            warnings.append(f"TB_TemperatureHumidity:{rowid}: malformed row ({exc}), row skipped")
            continue
        records.append(ArtifactRecord(
            kind=KIND_ENVIRONMENT,
            payload=reading,
            locator=make_locator(package, relative_path, CONTAINER_SQLITE,
                                 f"TB_TemperatureHumidity:{rowid}"),
            recovered_at=recovered_at,
        ))
    return records, warnings


def parse_user_info(db: bytes, *, package: str = PACKAGE_FOLDER,
                    relative_path: str = DEFAULT_DB_PATH,
                    recovered_at: str = "") -> tuple[list[ArtifactRecord], list[str]]:
    """Account-holder profiles from TB_Userinfo."""
    records: list[ArtifactRecord] = []
    warnings: list[str] = []
    with connect_bytes(db) as conn:
        rows = select_rows(conn, "TB_Userinfo", ["Name", "Birthday", "TimeZone", "Email"])
    for rowid, name, birthday, tz, email in rows:
        email_s = _text(email)
        if email_s and not looks_like_email(email_s):
            warnings.append(f"TB_Userinfo:{rowid}: malformed row (bad email {email_s!r}), row skipped")
            continue
        profile = MyVitalsProfile(
            name=_text(name),
            date_of_birth=_text(birthday),
            timezone_location=_text(tz),
            email=email_s,
        )
        records.append(ArtifactRecord(
            kind=KIND_USER_PROFILE,
            payload=profile,
            locator=make_locator(package, relative_path, CONTAINER_SQLITE,
                                 f"TB_Userinfo:{rowid}"),
            recovered_at=recovered_at,
        ))
    return records, warnings


def parse_region_host_xml(xml: bytes, *, package: str = PACKAGE_FOLDER,
                          relative_path: str = DEFAULT_XML_PATH,
                          recovered_at: str = "") -> tuple[list[ArtifactRecord], list[str]]:
    """Recover account credentials from sp_user_region_host_info.xml.

    Keys are "<account email><suffix>"; suffixes map to credential fields.
    Normally one credential set comes back; if entries carry different
    account prefixes every set is returned and the inconsistency flagged.
    """
    entries = parse_shared_prefs(xml)
    by_account: dict[str, dict[str, object]] = {}
    for key, value in entries.items():
        for suffix, field_name in CREDENTIAL_SUFFIXES.items():
            if key.endswith(suffix):
                prefix = key[: -len(suffix)]
                by_account.setdefault(prefix, {})[field_name] = value
                break
    if not by_account:
        raise NoCredentialKeysError(
            f"{relative_path}: no recognized credential key suffixes in map"
        )
    warnings: list[str] = []
    if len(by_account) > 1:
        warnings.append(
            "inconsistent account prefixes in credential XML: "
            + ", ".join(sorted(by_account))
        )
    records: list[ArtifactRecord] = []
    for account in sorted(by_account):
        fields = by_account[account]
        if not looks_like_email(account):
            warnings.append(f"credential key prefix is not an email address: {account!r}")
        password = fields.get("password_plaintext")
        flag = fields.get("is_online_flag")
        credential = CredentialSet(
            account=account,
            password_plaintext=str(password) if password is not None else None,
            refresh_token=_opt_str(fields.get("refresh_token")),
            access_token=_opt_str(fields.get("access_token")),
            region_host=_opt_str(fields.get("region_host")),
            is_online_flag=bool(flag) if flag is not None else None,
        )
        records.append(ArtifactRecord(
            kind=KIND_CREDENTIAL,
            payload=credential,
            locator=make_locator(package, relative_path, CONTAINER_XML,
                                 f"key prefix {account}"),
            recovered_at=recovered_at,
        ))
    return records, warnings


def _opt_str(value) -> str | None:
    return None if value is None else str(value)


class MyVitalsParser(AppParser):
    parser_id = "myvitals"
    display_name = DISPLAY_NAME
    folder = PACKAGE_FOLDER
    signature = f"{DB_SUBPATH} present under the app folder"

    def detect(self, root: AppDataRoot, source: EvidenceSource) -> bool:
        return (root.package_name == PACKAGE_FOLDER
                and f"{root.relative_path}/{DB_SUBPATH}" in source.root_listing)

    def parse(self, root: AppDataRoot, source: EvidenceSource, *,
              recovered_at: str = "", code_map=None) -> ParseResult:
        records: list[ArtifactRecord] = []
        warnings: list[str] = []
        consumed: set[str] = set()

        db_path = f"{root.relative_path}/{DB_SUBPATH}"
        db = read_file(source, db_path)
        consumed.add(db_path)
        table_ops = (parse_bp_results, parse_spo2_results, parse_weight_results,
                     parse_environment, parse_user_info)
        for op in table_ops:
            try:
                recs, warns = op(db, package=root.package_name,
                                 relative_path=db_path, recovered_at=recovered_at)
            except NotSqliteError:
                warnings.append(f"{db_path}: not a SQLite database (possibly encrypted)")
                break
            except MissingTableError as exc:
                warnings.append(f"{db_path}: {exc}")
                continue
            records.extend(recs)
            warnings.extend(warns)

        for xml_path in files_under(source, root):
            if xml_path.rsplit("/", 1)[-1] != CREDENTIAL_XML_NAME:
                continue
            consumed.add(xml_path)
            try:
                recs, warns = parse_region_host_xml(
                    read_file(source, xml_path), package=root.package_name,
                    relative_path=xml_path, recovered_at=recovered_at)
                records.extend(recs)
                warnings.extend(warns)
            except ScanError as exc:
                warnings.append(f"{xml_path}: {exc}")

        return ParseResult(records=tuple(records), warnings=tuple(warnings),
                           consumed=frozenset(consumed))
