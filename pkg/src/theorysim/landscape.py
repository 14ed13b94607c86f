"""
Конечные ландшафты для симулятора цепи: значения f и граф соседей.

Генераторы:
    - line, ring, star - простые графы с заданными или случайными f
    - rugged - кольцо с хордами и случайными f
    - trap - двойная яма: широкая локальная и узкая глобальная

Формат файла: CSV с заголовком state,f,neighbors, соседи через ';'.
"""

import csv
import logging
import os
from collections import deque
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np


logger = logging.getLogger(__name__)

LANDSCAPE_COLUMNS = ["state", "f", "neighbors"]


@dataclass(frozen=True)
class Landscape:
    """
    Пара (G, f): конечное множество состояний с целевой функцией.

    Соседство симметрично, у каждого состояния есть сосед,
    граф связен (глобальный минимум достижим из любого состояния).
    """
    values: Tuple[float, ...]
    neighbors: Tuple[Tuple[int, ...], ...]
    name: str = "custom"

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        object.__setattr__(self, "neighbors", tuple(tuple(int(j) for j in nb) for nb in self.neighbors))

        n = len(self.values)
        if n < 2:
            raise LandscapeError(f"Нужно хотя бы 2 состояния, получено {n}")
        if len(self.neighbors) != n:
            raise LandscapeError(f"Списков соседей {len(self.neighbors)}, состояний {n}")
        if not all(np.isfinite(self.values)):
            raise LandscapeError("Значения f должны быть конечными")

        sets = [set(nb) for nb in self.neighbors]
        for state, nb in enumerate(self.neighbors):
            if not nb:
                raise LandscapeError(f"У состояния {state} нет соседей")
            for j in nb:
                if not 0 <= j < n:
                    raise LandscapeError(f"Состояние {state}: сосед {j} вне диапазона [0, {n})")
                if j == state:
                    raise LandscapeError(f"Состояние {state} указано своим соседом")
                if state not in sets[j]:
                    raise LandscapeError(f"Соседство несимметрично: {state} -> {j}, но не {j} -> {state}")

        unreachable = disconnected_states(self.neighbors)
        if unreachable:
            raise LandscapeError(
                f"Граф соседей несвязен: {len(unreachable)} состояний недостижимы из 0 "
                f"(например, {unreachable[0]})"
            )

    @property
    def n_states(self) -> int:
        return len(self.values)

    def f(self, state: int) -> float:
        return self.values[state]

    @property
    def min_value(self) -> float:
        return min(self.values)

    def global_minima(self) -> Tuple[int, ...]:
        """Все глобальные минимумы полным перебором."""
        best = self.min_value
        return tuple(i for i, v in enumerate(self.values) if v == best)


def disconnected_states(neighbors: Sequence[Sequence[int]]) -> List[int]:
    """Состояния, недостижимые из состояния 0 (обход в ширину)."""
    seen = {0}
    queue = deque([0])
    while queue:
        state = queue.popleft()
        for j in neighbors[state]:
            if j not in seen:
                seen.add(j)
                queue.append(j)
    return [s for s in range(len(neighbors)) if s not in seen]


def _resolve_values(n: int, values: Optional[Sequence[float]],
                    rng: Optional[np.random.Generator]) -> List[float]:
    if values is not None:
        if len(values) != n:
            raise LandscapeError(f"Ожидалось {n} значений f, получено {len(values)}")
        return list(values)
    rng = rng if rng is not None else np.random.default_rng(0)
    return list(rng.random(n))


def line(n: int, values: Optional[Sequence[float]] = None,
         rng: Optional[np.random.Generator] = None) -> Landscape:
    """Путь 0 - 1 - ... - (n-1)."""
    if n < 2:
        raise LandscapeError("Путь требует n >= 2")
    neighbors = [[j for j in (i - 1, i + 1) if 0 <= j < n] for i in range(n)]
    return Landscape(_resolve_values(n, values, rng), neighbors, name=f"line{n}")


def ring(n: int, values: Optional[Sequence[float]] = None,
         rng: Optional[np.random.Generator] = None) -> Landscape:
    """Цикл из n состояний."""
    if n < 3:
        raise LandscapeError("Кольцо требует n >= 3")
    neighbors = [[(i - 1) % n, (i + 1) % n] for i in range(n)]
    return Landscape(_resolve_values(n, values, rng), neighbors, name=f"ring{n}")


def star(leaf_values: Sequence[float], center_value: float = 1.0) -> Landscape:
    """Звезда: центр 0 соединён с листьями 1..L."""
    n_leaves = len(leaf_values)
    if n_leaves < 1:
        raise LandscapeError("Звезда требует хотя бы один лист")
    neighbors = [list(range(1, n_leaves + 1))] + [[0] for _ in range(n_leaves)]
    return Landscape([center_value] + list(leaf_values), neighbors, name=f"star{n_leaves}")


def rugged(n: int, n_chords: int, rng: np.random.Generator) -> Landscape:
    """
    Кольцо с n_chords случайными хордами и f ~ U[0, 1).

    Хорды не дублируют рёбра кольца и друг друга.
    """
    if n < 4:
        raise LandscapeError("Шероховатый ландшафт требует n >= 4")
    adjacency = [{(i - 1) % n, (i + 1) % n} for i in range(n)]
    max_chords = n * (n - 1) // 2 - n
    if not 0 <= n_chords <= max_chords:
        raise LandscapeError(f"Число хорд должно лежать в [0, {max_chords}]")

    values = list(rng.random(n))
    added = 0
    while added < n_chords:
        a, b = (int(x) for x in rng.integers(0, n, size=2))
        if a == b or b in adjacency[a]:
            continue
        adjacency[a].add(b)
        adjacency[b].add(a)
        added += 1
    neighbors = [sorted(adj) for adj in adjacency]
    return Landscape(values, neighbors, name=f"rugged{n}")


def trap(n: int, barrier: float = 1.0, local_depth: float = 0.2, noise: float = 0.0,
         rng: Optional[np.random.Generator] = None) -> Landscape:
    """
    Двойная яма на пути из n состояний.

    Широкая локальная яма с минимумом local_depth в n/4 и узкая
    глобальная яма с минимумом 0 у правого края; между ними барьер.
    Жадный спуск из левой части застревает в локальной яме.

    Args:
        n: Число состояний (>= 8)
        barrier: Крутизна стенок глобальной ямы
        local_depth: Значение f в локальном минимуме (> 0)
        noise: Амплитуда случайной добавки к f (0 - без шума)
        rng: Генератор для шума
    """
    if n < 8:
        raise LandscapeError("Ловушка требует n >= 8")
    if local_depth <= 0:
        raise LandscapeError("local_depth должна быть > 0")
    local_center = n // 4
    global_center = n - 1 - max(1, n // 16)
    width = max(2, n // 8)

    idx = np.arange(n)
    f_local = local_depth + np.abs(idx - local_center) / n
    f_global = barrier * np.abs(idx - global_center) / width
    values = np.minimum(f_local, f_global)
    if noise > 0:
        rng = rng if rng is not None else np.random.default_rng(0)
        values = values + noise * rng.random(n)
    neighbors = [[j for j in (i - 1, i + 1) if 0 <= j < n] for i in range(n)]
    return Landscape(list(values), neighbors, name=f"trap{n}")


def save_landscape(path: str, land: Landscape) -> None:
    """Запись ландшафта в CSV (state,f,neighbors)."""
    dir_path = os.path.dirname(path)
    if dir_path:
        os.makedirs(dir_path, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(LANDSCAPE_COLUMNS)
        for state, (value, nb) in enumerate(zip(land.values, land.neighbors)):
            writer.writerow([state, repr(value), ";".join(str(j) for j in nb)])


def load_landscape(path: str) -> Landscape:
    """
    Загрузка ландшафта из CSV с проверкой связности.

    Raises:
        LandscapeError: При нарушении формата или инвариантов
    """
    with open(path, "r", newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != LANDSCAPE_COLUMNS:
            raise LandscapeError(f"Ожидался заголовок {','.join(LANDSCAPE_COLUMNS)}, получено {header}")
        rows = [row for row in reader if row]

    values: List[float] = [0.0] * len(rows)
    neighbors: List[List[int]] = [[] for _ in rows]
    seen = set()
    for line_no, row in enumerate(rows, start=2):
        if len(row) != 3:
            raise LandscapeError(f"Строка {line_no}: ожидалось 3 поля, найдено {len(row)}")
        try:
            state = int(row[0])
            value = float(row[1])
            nb = [int(tok) for tok in row[2].split(";") if tok.strip()]
        except ValueError as e:
            raise LandscapeError(f"Строка {line_no}: {e}")
        if not 0 <= state < len(rows) or state in seen:
            raise LandscapeError(f"Строка {line_no}: некорректный или повторный номер состояния {state}")
        seen.add(state)
        values[state] = value
        neighbors[state] = nb

    name = os.path.splitext(os.path.basename(path))[0]
    land = Landscape(values, neighbors, name=name)
    logger.debug("Загружен ландшафт %s: %d состояний", name, land.n_states)
    return land


class TheorySimError(Exception):
    """Базовый класс ошибок симулятора цепи."""
    pass


class LandscapeError(TheorySimError, ValueError):
    """Ландшафт нарушает инварианты (размер, симметрия, связность, формат)."""
    pass


class ChainConfigError(TheorySimError, ValueError):
    """Некорректная конфигурация цепи."""
    pass
