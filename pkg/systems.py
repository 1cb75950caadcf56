"""
ECS systems for the Monte-Carlo harness.
Each trial is an entity; systems move trials through activation, data
generation, estimation and error measurement, one batch per tick.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Sequence

import esper

from components import (Active, Completed, HarnessState, Pending, TrialData, TrialEstimates,
                        TrialOutcome, TrialRecord, TrialSetup)

logger = logging.getLogger(__name__)

HARNESS_WORLD = "monte-carlo-harness"


def get_harness_state() -> Optional[HarnessState]:
    """The singleton HarnessState component, if one exists."""
    for entity, state in esper.get_component(HarnessState):
        return state
    return None


def _parallel_map(function: Callable, items: Sequence, threads: int) -> List:
    """Order-preserving map; numpy releases the GIL in the heavy kernels."""
    if threads <= 1 or len(items) <= 1:
        return [function(*item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda item: function(*item), items))


class TrialActivationSystem(esper.Processor):
    """
    Moves the next batch of pending trials into the active set once the
    previous batch has finished. Trials are taken in entity (creation) order.
    """

    def process(self):
        state = get_harness_state()
        if state is None or esper.get_component(Active):
            return
        pending = sorted(entity for entity, _ in esper.get_component(Pending))
        for entity in pending[:state.batch_size]:
            esper.remove_component(entity, Pending)
            esper.add_component(entity, Active())


class DataGenerationSystem(esper.Processor):
    """Generates the dataset of every active trial that has none yet."""

    def process(self):
        state = get_harness_state()
        if state is None:
            return
        todo = [(entity, setup) for entity, (setup, _) in esper.get_components(TrialSetup, Active)
                if not esper.has_component(entity, TrialData)]
        todo.sort(key=lambda item: item[0])
        results = _parallel_map(state.scenario.generate, [(setup,) for _, setup in todo], state.threads)
        for (entity, _), data in zip(todo, results):
            esper.add_component(entity, data)


class EstimationSystem(esper.Processor):
    """Fits every requested method on the trial data (same data for all methods)."""

    def process(self):
        state = get_harness_state()
        if state is None:
            return
        todo = [(entity, setup, data)
                for entity, (setup, data, _) in esper.get_components(TrialSetup, TrialData, Active)
                if not esper.has_component(entity, TrialEstimates)]
        todo.sort(key=lambda item: item[0])
        results = _parallel_map(state.scenario.estimate, [(setup, data) for _, setup, data in todo],
                                state.threads)
        for (entity, _, _), estimates in zip(todo, results):
            esper.add_component(entity, estimates)


class ErrorMeasurementSystem(esper.Processor):
    """Turns estimates into TrialRecords and marks the trial completed."""

    def process(self):
        state = get_harness_state()
        if state is None:
            return
        finished = sorted(esper.get_components(TrialSetup, TrialData, TrialEstimates, Active),
                          key=lambda item: item[0])
        for entity, (setup, data, estimates, _) in finished:
            records = state.scenario.measure(setup, data, estimates)
            esper.add_component(entity, TrialOutcome(records=records))
            esper.remove_component(entity, Active)
            esper.add_component(entity, Completed())
            state.completed += 1
            diverged = [r.method for r in records if r.diverged]
            if diverged:
                logger.info("[TRIAL] n=%d trial=%d: %s censored", setup.n, setup.trial, ", ".join(diverged))


class TrialCleanupSystem(esper.Processor):
    """
    Drops generated data and raw estimates of completed trials.
    Runs first in a tick so a measured trial keeps its data for one tick.
    """

    def process(self):
        for entity, _ in esper.get_component(Completed):
            for component_type in (TrialData, TrialEstimates):
                if esper.has_component(entity, component_type):
                    esper.remove_component(entity, component_type)


def collect_records() -> List[TrialRecord]:
    """Records of all completed trials in (setting, n, trial) order, methods as fitted."""
    outcomes = sorted(esper.get_components(TrialSetup, TrialOutcome),
                      key=lambda item: (item[1][0].setting_index, item[1][0].n, item[1][0].trial))
    return [record for _, (_, outcome) in outcomes for record in outcome.records]


def run_harness(scenario, batch_size: int = 8, threads: int = 1,
                progress_every: int = 10) -> List[TrialRecord]:
    """
    Run every trial of a scenario through the systems in a dedicated world.

    Args:
        scenario: a Scenario providing setups(), generate(), estimate(), measure()
        batch_size: trials active at once
        threads: worker threads for generation and estimation within a batch
        progress_every: ticks between progress log lines

    Returns:
        All TrialRecords, ordered independently of scheduling
    """
    previous_world = esper._current_context
    esper.switch_world(HARNESS_WORLD)
    esper.clear_database()
    try:
        setups = scenario.setups()
        state_entity = esper.create_entity()
        esper.add_component(state_entity, HarnessState(scenario=scenario, batch_size=batch_size,
                                                       threads=threads, total=len(setups)))
        for setup in setups:
            esper.create_entity(setup, Pending())

        esper.add_processor(TrialCleanupSystem())      # First: free data of trials measured last tick
        esper.add_processor(TrialActivationSystem())   # Then: start the next batch
        esper.add_processor(DataGenerationSystem())    # Then: sample data
        esper.add_processor(EstimationSystem())        # Then: fit methods
        esper.add_processor(ErrorMeasurementSystem())  # Finally: record errors

        state = esper.component_for_entity(state_entity, HarnessState)
        logger.info("[EXPERIMENT] %s: %d trials in batches of %d",
                    scenario.spec.name, state.total, batch_size)
        while state.completed < state.total:
            state.current_tick += 1
            esper.process()
            if state.current_tick % progress_every == 0:
                logger.info("[EXPERIMENT] tick %d: %d/%d trials done",
                            state.current_tick, state.completed, state.total)
        esper.process()
        return collect_records()
    finally:
        esper.switch_world(previous_world)
        esper.delete_world(HARNESS_WORLD)
