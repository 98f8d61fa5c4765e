"""HTTP review service for the moderator loop.

Exposes detection/identification artifacts over JSON, records verdicts in an
append-only ledger, promotes confirmed euphemisms into a new versioned
keyword list, and triggers asynchronous re-detection with the expanded list.
Item statuses are always derived by replaying the ledger, so a crash-restart
reconstructs identical state.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .corpus import TargetKeyword, load_keywords
from .detection import load_ranking
from .pipeline import run_detect
from .runs import RunConfig, RunManifest

VERDICTS = ("confirmed", "rejected", "unsure")
ALLOWED_TRANSITIONS = {
    "pending": {"confirmed", "rejected", "unsure"},
    "unsure": {"confirmed", "rejected"},
    "confirmed": set(),
    "rejected": set(),
}


class VerdictRequest(BaseModel):
    word: str
    verdict: str
    mapped_keyword: str | None = None
    reviewer: str = "moderator"


class RerunRequest(BaseModel):
    run_id: str | None = None
    t: int | None = None
    seed: int | None = None


@dataclass
class RerunState:
    status: str  # running | complete | failed
    new_run_id: str
    error: str | None = None


class ReviewStore:
    """File-backed review state for one run."""

    def __init__(self, run_dir: Path) -> None:
        self.run_dir = run_dir
        self.ledger_path = run_dir / "reviews" / "ledger.jsonl"
        self.write_lock = threading.Lock()

    def ranking_entries(self):
        return load_ranking(self.run_dir).entries

    def contexts(self) -> dict[str, dict]:
        path = self.run_dir / "rankings" / "contexts.jsonl"
        out: dict[str, dict] = {}
        if path.is_file():
            with path.open(encoding="utf-8") as fh:
                for line in fh:
                    record = json.loads(line)
                    out[record["word"]] = record
        return out

    def distributions(self) -> dict[str, dict]:
        path = self.run_dir / "distributions" / "distributions.jsonl"
        out: dict[str, dict] = {}
        if path.is_file():
            with path.open(encoding="utf-8") as fh:
                for line in fh:
                    record = json.loads(line)
                    if "error" not in record:
                        out[record["word"]] = record
        return out

    def ledger(self) -> list[dict]:
        if not self.ledger_path.is_file():
            return []
        with self.ledger_path.open(encoding="utf-8") as fh:
            return [json.loads(line) for line in fh]

    def append(self, record: dict) -> None:
        self.ledger_path.parent.mkdir(parents=True, exist_ok=True)
        with self.write_lock:
            with self.ledger_path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(record, sort_keys=True) + "\n")

    def replay(self) -> tuple[dict[str, dict], set[str]]:
        """(word -> {status, mapped_keyword}, promoted words)."""
        statuses: dict[str, dict] = {}
        promoted: set[str] = set()
        for record in self.ledger():
            if record["kind"] == "verdict":
                statuses[record["word"]] = {
                    "status": record["verdict"],
                    "mapped_keyword": record.get("mapped_keyword"),
                }
            elif record["kind"] == "promotion":
                promoted.update(record["words"])
        return statuses, promoted

    def latest_keyword_list(self) -> Path:
        promotions = sorted((self.run_dir / "promotions").glob("keywords_v*.tsv"))
        if not promotions:
            raise HTTPException(status_code=409, detail="run has no keyword list versions")
        return promotions[-1]

    def item(self, rank: int, entry, statuses, contexts, distributions) -> dict:
        state = statuses.get(entry.word, {"status": "pending", "mapped_keyword": None})
        context_record = contexts.get(entry.word, {})
        return {
            "word": entry.word,
            "rank": rank,
            "weight": entry.weight,
            "support": entry.support,
            "status": state["status"],
            "mapped_keyword": state["mapped_keyword"],
            "contexts": context_record.get("contexts", []),
            "bigrams": context_record.get("bigrams", []),
            "distribution": distributions.get(entry.word),
        }


def create_app(runs_root: str | Path, frontend_dir: str | Path | None = None) -> FastAPI:
    runs_root = Path(runs_root)
    app = FastAPI(title="euphkit review service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    stores: dict[str, ReviewStore] = {}
    reruns: dict[str, RerunState] = {}
    rerun_lock = threading.Lock()

    def store_for(run_id: str) -> ReviewStore:
        run_dir = runs_root / run_id
        if not (run_dir / "manifest.json").is_file():
            raise HTTPException(status_code=404, detail=f"unknown run {run_id!r}")
        if run_id not in stores:
            stores[run_id] = ReviewStore(run_dir)
        return stores[run_id]

    @app.get("/runs")
    def list_runs():
        out = []
        for manifest_path in sorted(runs_root.glob("*/manifest.json")):
            manifest = RunManifest.load(manifest_path.parent)
            out.append(
                {
                    "run_id": manifest.payload["run_id"],
                    "stages": {
                        name: stage["status"]
                        for name, stage in manifest.payload["stages"].items()
                    },
                }
            )
        return {"runs": out}

    @app.get("/runs/{run_id}/candidates")
    def list_candidates(run_id: str, page: int = 1, page_size: int = 20):
        if page < 1 or page_size < 1:
            raise HTTPException(status_code=422, detail="page and page_size must be >= 1")
        store = store_for(run_id)
        entries = store.ranking_entries()
        statuses, _promoted = store.replay()
        contexts = store.contexts()
        distributions = store.distributions()
        start = (page - 1) * page_size
        items = [
            store.item(start + i + 1, entry, statuses, contexts, distributions)
            for i, entry in enumerate(entries[start : start + page_size])
        ]
        return {
            "run_id": run_id,
            "page": page,
            "page_size": page_size,
            "total": len(entries),
            "items": items,
        }

    @app.get("/runs/{run_id}/candidates/{word}")
    def get_candidate(run_id: str, word: str):
        store = store_for(run_id)
        entries = store.ranking_entries()
        for i, entry in enumerate(entries):
            if entry.word == word:
                statuses, _ = store.replay()
                return store.item(
                    i + 1, entry, statuses, store.contexts(), store.distributions()
                )
        raise HTTPException(status_code=404, detail=f"unknown word {word!r}")

    @app.post("/runs/{run_id}/verdicts")
    def submit_verdict(run_id: str, request: VerdictRequest):
        store = store_for(run_id)
        if request.verdict not in VERDICTS:
            raise HTTPException(status_code=422, detail=f"verdict must be one of {VERDICTS}")
        entries = store.ranking_entries()
        entry = next((e for e in entries if e.word == request.word), None)
        if entry is None:
            raise HTTPException(status_code=404, detail=f"unknown word {request.word!r}")

        keywords = {k.surface for k in load_keywords(store.latest_keyword_list())}
        if request.verdict == "confirmed":
            if not request.mapped_keyword:
                raise HTTPException(
                    status_code=422, detail="confirmed verdict requires mapped_keyword"
                )
            if request.mapped_keyword not in keywords:
                raise HTTPException(
                    status_code=422,
                    detail=f"mapped_keyword {request.mapped_keyword!r} is not a known keyword",
                )

        statuses, _ = store.replay()
        current = statuses.get(request.word, {"status": "pending"})["status"]
        if request.verdict not in ALLOWED_TRANSITIONS[current]:
            raise HTTPException(
                status_code=409,
                detail=f"invalid transition {current} -> {request.verdict}",
            )
        store.append(
            {
                "ts": datetime.now(timezone.utc).isoformat(),
                "kind": "verdict",
                "word": request.word,
                "verdict": request.verdict,
                "mapped_keyword": request.mapped_keyword,
                "reviewer": request.reviewer,
            }
        )
        statuses, _ = store.replay()
        rank = next(i + 1 for i, e in enumerate(entries) if e.word == request.word)
        return store.item(rank, entry, statuses, store.contexts(), store.distributions())

    @app.post("/runs/{run_id}/promote")
    def promote_confirmed(run_id: str):
        store = store_for(run_id)
        statuses, promoted = store.replay()
        confirmed = {
            word: state["mapped_keyword"]
            for word, state in statuses.items()
            if state["status"] == "confirmed" and state["mapped_keyword"]
        }
        pending = sorted(set(confirmed) - promoted)
        if not pending:
            raise HTTPException(status_code=409, detail="nothing to promote")

        source = store.latest_keyword_list()
        keywords = load_keywords(source)
        categories = {k.surface: k.category for k in keywords}
        existing = set(categories)
        added = []
        for word in pending:
            if word in existing:
                continue  # already a keyword; deduplicated
            category = categories[confirmed[word]]
            keywords.append(TargetKeyword(surface=word, category=category))
            added.append(word)

        promotions = store.run_dir / "promotions"
        version = len(sorted(promotions.glob("keywords_v*.tsv"))) + 1
        path = promotions / f"keywords_v{version:03d}.tsv"
        path.write_text(
            "".join(f"{k.surface}\t{k.category}\n" for k in keywords), encoding="utf-8"
        )
        store.append(
            {
                "ts": datetime.now(timezone.utc).isoformat(),
                "kind": "promotion",
                "words": pending,
                "added": added,
                "path": str(path),
            }
        )
        return {"keyword_list": str(path), "promoted": pending, "added": added,
                "total_keywords": len(keywords)}

    @app.post("/runs/{run_id}/rerun")
    def trigger_rerun(run_id: str, request: RerunRequest):
        store = store_for(run_id)
        promotions = sorted((store.run_dir / "promotions").glob("keywords_v*.tsv"))
        if len(promotions) < 2:
            raise HTTPException(
                status_code=409, detail="no promoted keyword list; promote first"
            )
        with rerun_lock:
            state = reruns.get(run_id)
            if state is not None and state.status == "running":
                raise HTTPException(status_code=409, detail="rerun already in progress")
            manifest = RunManifest.load(store.run_dir)
            base = dict(manifest.payload["config"])
            base["keyword_list_path"] = str(promotions[-1])
            serial = len(list(runs_root.glob(f"{run_id}-r*"))) + 2
            base["run_id"] = request.run_id or f"{run_id}-r{serial}"
            if request.t is not None:
                base["t"] = request.t
            if request.seed is not None:
                base["seed"] = request.seed
            base["k_values"] = tuple(base["k_values"])
            config = RunConfig(**base).validate()
            state = RerunState(status="running", new_run_id=config.run_id)
            reruns[run_id] = state

        def work():
            try:
                run_detect(config)
                state.status = "complete"
            except Exception as exc:  # recorded for polling, never raised
                state.status = "failed"
                state.error = str(exc)

        thread = threading.Thread(target=work, daemon=True)
        thread.start()
        return {"new_run_id": state.new_run_id, "status": state.status}

    @app.get("/runs/{run_id}/status")
    def run_status(run_id: str):
        store = store_for(run_id)
        manifest = RunManifest.load(store.run_dir)
        state = reruns.get(run_id)
        return {
            "run_id": run_id,
            "stages": {
                name: stage["status"]
                for name, stage in manifest.payload["stages"].items()
            },
            "rerun": (
                {"status": state.status, "new_run_id": state.new_run_id, "error": state.error}
                if state
                else None
            ),
        }

    if frontend_dir is not None and Path(frontend_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(frontend_dir), html=True), name="ui")

    return app
