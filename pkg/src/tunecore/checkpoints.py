"""Checkpoint store: opaque files with digests and bounded per-trial retention."""

from __future__ import annotations

import hashlib
import os
import shutil
from pathlib import Path
from typing import List, Tuple

from .errors import DigestMismatch, MissingFile
from .trials import CheckpointRef, Trial


def file_digest(path: str) -> str:
    try:
        with open(path, "rb") as fh:
            return hashlib.sha256(fh.read()).hexdigest()
    except FileNotFoundError as exc:
        raise MissingFile(f"checkpoint file missing: {path}") from exc


class CheckpointStore:
    """Owns the checkpoint directory layout under <outdir>/checkpoints."""

    def __init__(self, root, keep_last: int = 2):
        if keep_last < 1:
            raise ValueError(f"keep_last must be >= 1, got {keep_last}")
        self.root = Path(root)
        self.keep_last = keep_last

    def path_for(self, trial_id: str, step: int) -> str:
        trial_dir = self.root / trial_id
        trial_dir.mkdir(parents=True, exist_ok=True)
        return str(trial_dir / f"step_{step}.ckpt")

    def record_saved(self, trial: Trial, path: str, step: int) -> Tuple[CheckpointRef, tuple, List[str]]:
        """Digest a freshly written file and apply retention.

        Returns (new ref, updated checkpoint tuple, paths pruned). The caller
        owns the actual deletion: the engine defers it until the next snapshot
        no longer references the files, so a crash can always resume.
        """
        ref = CheckpointRef(trial_id=trial.id, step=step, path=path, digest=file_digest(path))
        refs = trial.checkpoints + (ref,)
        pruned = []
        while len(refs) > self.keep_last:
            victim, refs = refs[0], refs[1:]
            pruned.append(victim.path)
        return ref, refs, pruned

    def verify(self, ref: CheckpointRef) -> None:
        """Raise MissingFile / DigestMismatch unless the file matches its ref."""
        digest = file_digest(ref.path)
        if digest != ref.digest:
            raise DigestMismatch(
                f"checkpoint {ref.path} digest {digest[:12]}... does not match recorded {ref.digest[:12]}..."
            )

    def copy_baseline(self, source: CheckpointRef, trial_id: str) -> CheckpointRef:
        """Copy a clone source's checkpoint into the trial's own directory.

        The copy outlives the source trial's retention, so a resumed
        experiment can always relaunch the clone from its starting state.
        """
        self.verify(source)
        trial_dir = self.root / trial_id
        trial_dir.mkdir(parents=True, exist_ok=True)
        dest = str(trial_dir / f"baseline_{source.step}.ckpt")
        shutil.copyfile(source.path, dest)
        return CheckpointRef(trial_id=trial_id, step=source.step, path=dest, digest=source.digest)

    @staticmethod
    def discard_paths(refs, keep_path: str = None) -> List[str]:
        """Paths for refs no longer reachable (e.g. after a restart)."""
        return [ref.path for ref in refs if ref.path != keep_path]

    @staticmethod
    def delete_files(paths) -> None:
        for path in paths:
            try:
                os.remove(path)
            except FileNotFoundError:
                pass
