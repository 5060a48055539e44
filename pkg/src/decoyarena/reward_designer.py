"""Client that asks an external LLM service to draft a persona reward config.

The wire format is provider-agnostic chat completion (JSON over HTTP);
endpoint, model name, and auth header come from the request. The response's
first fenced YAML block is extracted and validated against the reward
schema. Tests run entirely against recorded transports; nothing here opens
a network connection unless an HttpTransport is constructed explicitly.
"""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import ExtractionError, ParseError, SchemaError, TransportError, ValidationError
from .rewards import RewardStructure, load_rewards

_FENCE_RE = re.compile(r"```([A-Za-z0-9_-]*)[ \t]*\n(.*?)```", re.DOTALL)
_CONFIG_LABELS = {"yaml", "yml"}


@dataclass(frozen=True)
class DesignRequest:
    """One reward-design conversation: persona prompt plus context documents.

    The context must include the baseline reward config the prompt refers to.
    ``extra_turns`` holds refinement feedback, in order.
    """

    persona_prompt: str
    context_documents: tuple[tuple[str, str], ...]
    model_endpoint: str
    model_name: str
    auth_token_env_var: str = "DECOYARENA_LLM_TOKEN"
    extra_turns: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.persona_prompt.strip():
            raise ValidationError("persona prompt must be non-empty")
        if not self.context_documents:
            raise ValidationError("context documents must include the baseline reward config")


@dataclass
class DesignResult:
    """Raw response, extracted config text, and the validated structure (if clean)."""

    raw_response: str
    extracted_config: str | None = None
    validated: RewardStructure | None = None
    diagnostics: list[str] = field(default_factory=list)


def build_messages(request: DesignRequest) -> list[dict]:
    blocks = []
    for name, text in request.context_documents:
        blocks.append(f"### {name}\n```yaml\n{text.rstrip()}\n```")
    messages = [
        {"role": "user", "content": "Context documents:\n\n" + "\n\n".join(blocks)},
        {"role": "user", "content": request.persona_prompt},
    ]
    for turn in request.extra_turns:
        messages.append({"role": "user", "content": turn})
    return messages


def build_payload(request: DesignRequest) -> dict:
    return {"model": request.model_name, "messages": build_messages(request)}


def build_headers(request: DesignRequest) -> dict:
    headers = {"content-type": "application/json"}
    token = os.environ.get(request.auth_token_env_var, "")
    if token:
        headers["authorization"] = f"Bearer {token}"
    return headers


class HttpTransport:
    """POSTs the payload as JSON and returns the parsed JSON response."""

    def __init__(self, timeout: float = 120.0):
        self.timeout = timeout

    def __call__(self, url: str, headers: dict, payload: dict) -> dict:
        import requests

        try:
            response = requests.post(url, headers=headers, json=payload,
                                      timeout=self.timeout)
            response.raise_for_status()
            return response.json()
        except requests.RequestException as exc:
            raise TransportError(f"LLM request failed: {exc}") from exc
        except ValueError as exc:
            raise TransportError(f"LLM response is not JSON: {exc}") from exc


def response_text(response: dict) -> str:
    """Pull the assistant text out of the common chat-completion shapes."""
    try:
        choices = response.get("choices")
        if choices:
            message = choices[0].get("message") or {}
            text = message.get("content")
            if isinstance(text, str):
                return text
        content = response.get("content")
        if isinstance(content, list) and content and isinstance(content[0], dict):
            text = content[0].get("text")
            if isinstance(text, str):
                return text
        if isinstance(response.get("text"), str):
            return response["text"]
    except (AttributeError, IndexError, TypeError):
        pass
    raise TransportError(f"unrecognized response shape: keys {sorted(response)!r}")


def extract_config_block(text: str) -> str:
    """First fenced block labeled yaml/yml; failing that, the first unlabeled block."""
    unlabeled = None
    for match in _FENCE_RE.finditer(text):
        label, body = match.group(1).lower(), match.group(2)
        if label in _CONFIG_LABELS:
            return body
        if label == "" and unlabeled is None:
            unlabeled = body
    if unlabeled is not None:
        return unlabeled
    raise ExtractionError("no fenced config block in response", raw_response=text)


def design_rewards(request: DesignRequest, transport) -> DesignResult:
    """Submit the request, extract the reward config, and validate it.

    Raises SchemaError (with diagnostics and the partial result attached) when
    the extracted config fails validation, ExtractionError when no config
    block exists; the raw response is preserved on both.
    """
    response = transport(request.model_endpoint, build_headers(request),
                         build_payload(request))
    raw = response_text(response)
    extracted = extract_config_block(raw)
    result = DesignResult(raw_response=raw, extracted_config=extracted)
    try:
        result.validated = load_rewards(extracted)
    except (SchemaError, ParseError) as exc:
        result.diagnostics = list(getattr(exc, "diagnostics", None) or [str(exc)])
        raise SchemaError(f"designed config failed validation: {exc}",
                          diagnostics=result.diagnostics, result=result) from exc
    return result


def refine_prompt(base: DesignRequest, feedback: str) -> DesignRequest:
    """Append expert feedback as one more turn; pure, no transport involved."""
    return replace(base, extra_turns=base.extra_turns + (feedback,))


def write_transcript(out_path: str | Path, request: DesignRequest,
                     result: DesignResult) -> None:
    """Persist request/response beside the output file for auditability."""
    out_path = Path(out_path)
    stem = out_path.parent / out_path.stem
    payload = build_payload(request)
    Path(f"{stem}.request.json").write_text(json.dumps(payload, indent=2) + "\n")
    Path(f"{stem}.response.txt").write_text(result.raw_response + "\n")
