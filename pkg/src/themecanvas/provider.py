"""Gateway to language-model completions with schema-validated structured output.

Every call renders a versioned prompt template, sends it to the configured
backend, and parses the response as JSON against the template's declared
schema, retrying with a corrective preamble on parse failures. The ``mock``
mode replays scripted fixture responses keyed by template (optionally by
template plus a digest of the variables), which makes every AI call site in
the engine deterministic and offline-testable: with a fixed script,
``complete_structured`` is a pure function of the request and call index.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import string
import threading
from collections import deque
from dataclasses import dataclass, field
from importlib import resources
from typing import Any, Mapping

import jsonschema

from .errors import EngineError

MODE_LIVE = "live"
MODE_MOCK = "mock"

_IDENTIFIER = re.compile(r"\$\{?([A-Za-z_][A-Za-z0-9_]*)\}?")

_RETRY_PREAMBLE = (
    "Your previous reply was not valid JSON for the required schema. "
    "Reply with a single valid JSON object and nothing else.\n\n"
)


@dataclass(frozen=True)
class PromptRequest:
    template_id: str
    variables: Mapping[str, str]
    response_schema_id: str


@dataclass
class ProviderConfig:
    mode: str = MODE_MOCK
    endpoint: str = ""
    credential_env: str = "THEMECANVAS_PROVIDER_KEY"
    max_retries: int = 2
    timeout: float = 30.0
    # Per-template overrides, e.g. {"summarize/1": {"max_retries": 0}}.
    template_overrides: dict[str, dict[str, Any]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.mode not in (MODE_LIVE, MODE_MOCK):
            raise EngineError("validation_error", f"unknown provider mode {self.mode!r}")
        if self.max_retries < 0:
            raise EngineError("validation_error", "max_retries must be >= 0")

    def retries_for(self, template_id: str) -> int:
        return int(
            self.template_overrides.get(template_id, {}).get(
                "max_retries", self.max_retries
            )
        )

    def timeout_for(self, template_id: str) -> float:
        return float(
            self.template_overrides.get(template_id, {}).get("timeout", self.timeout)
        )


def _load_text(relative: str) -> str:
    return resources.files(__package__).joinpath(relative).read_text(encoding="utf-8")


def _template_path(template_id: str) -> str:
    return f"prompts/{template_id}.txt"


def _schema_path(schema_id: str) -> str:
    return f"schemas/{schema_id}.json"


class _Registry:
    """Lazy cache of shipped prompt templates and response schemas."""

    def __init__(self) -> None:
        self._templates: dict[str, string.Template] = {}
        self._schemas: dict[str, dict[str, Any]] = {}

    def template(self, template_id: str) -> string.Template:
        if template_id not in self._templates:
            try:
                text = _load_text(_template_path(template_id))
            except (FileNotFoundError, NotADirectoryError):
                raise EngineError(
                    "validation_error", f"no template registered for {template_id!r}"
                )
            self._templates[template_id] = string.Template(text)
        return self._templates[template_id]

    def schema(self, schema_id: str) -> dict[str, Any]:
        if schema_id not in self._schemas:
            try:
                text = _load_text(_schema_path(schema_id))
            except (FileNotFoundError, NotADirectoryError):
                raise EngineError(
                    "validation_error", f"no schema registered for {schema_id!r}"
                )
            self._schemas[schema_id] = json.loads(text)
        return self._schemas[schema_id]


_REGISTRY = _Registry()


def variables_digest(variables: Mapping[str, str]) -> str:
    canonical = json.dumps(dict(variables), sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def script_key(template_id: str, variables: Mapping[str, str] | None = None) -> str:
    """Mock-script key: template id alone, or template id + variables digest."""
    if variables is None:
        return template_id
    return f"{template_id}#{variables_digest(variables)}"


class ProviderClient:
    """Uniform completion client; safe for concurrent calls."""

    def __init__(self, config: ProviderConfig | None = None) -> None:
        self.config = config or ProviderConfig()
        self._scripts: dict[str, deque[Any]] = {}
        self._lock = threading.Lock()

    # -- mock scripting -------------------------------------------------------

    def register_mock_script(self, key: str, responses: list[Any]) -> None:
        """Queue fixture responses for a key; consumed in order per key."""
        if self.config.mode != MODE_MOCK:
            raise EngineError("not_in_mock_mode", "scripts only apply in mock mode")
        with self._lock:
            self._scripts.setdefault(key, deque()).extend(responses)

    def _pop_scripted(self, request: PromptRequest) -> Any:
        exact = script_key(request.template_id, request.variables)
        with self._lock:
            for key in (exact, request.template_id):
                queue = self._scripts.get(key)
                if queue:
                    return queue.popleft()
        raise EngineError(
            "provider_unreachable",
            f"mock script exhausted for template {request.template_id!r}",
        )

    # -- completion -----------------------------------------------------------

    def complete_structured(self, request: PromptRequest) -> dict[str, Any]:
        """Render, call, parse, validate; retry on schema failures."""
        template = _REGISTRY.template(request.template_id)
        schema = _REGISTRY.schema(request.response_schema_id)
        required = set(_IDENTIFIER.findall(template.template))
        missing = required - set(request.variables)
        if missing:
            raise EngineError(
                "validation_error",
                f"template {request.template_id!r} missing variables: {sorted(missing)}",
            )
        prompt = template.substitute(request.variables)

        attempts = self.config.retries_for(request.template_id) + 1
        timeout = self.config.timeout_for(request.template_id)
        last_failure = ""
        for attempt in range(attempts):
            if self.config.mode == MODE_MOCK:
                raw = self._pop_scripted(request)
            else:
                raw = self._call_live(
                    prompt if attempt == 0 else _RETRY_PREAMBLE + prompt, timeout
                )
            try:
                parsed = raw if isinstance(raw, dict) else json.loads(str(raw))
                jsonschema.validate(parsed, schema)
            except (json.JSONDecodeError, TypeError) as exc:
                last_failure = f"response was not JSON: {exc}"
                continue
            except jsonschema.ValidationError as exc:
                last_failure = f"schema violation: {exc.message}"
                continue
            return parsed
        raise EngineError(
            "schema_violation_exhausted",
            f"no valid response after {attempts} attempt(s): {last_failure}",
        )

    def _call_live(self, prompt: str, timeout: float) -> str:
        import requests

        if not self.config.endpoint:
            raise EngineError("provider_unreachable", "no endpoint configured")
        headers = {}
        credential = os.environ.get(self.config.credential_env, "")
        if credential:
            headers["Authorization"] = f"Bearer {credential}"
        try:
            response = requests.post(
                self.config.endpoint,
                json={"prompt": prompt},
                headers=headers,
                timeout=timeout,
            )
        except requests.Timeout:
            raise EngineError("timeout", f"provider timed out after {timeout}s")
        except requests.RequestException as exc:
            raise EngineError("provider_unreachable", str(exc))
        if response.status_code != 200:
            raise EngineError(
                "provider_unreachable", f"provider returned HTTP {response.status_code}"
            )
        data = response.json() if response.headers.get("content-type", "").startswith(
            "application/json"
        ) else response.text
        if isinstance(data, dict) and "content" in data:
            return data["content"]
        return data if isinstance(data, str) else json.dumps(data)
