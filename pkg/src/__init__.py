"""
AGGAN Lab - эволюционное обучение GAN с имитацией отжига.

Модули:
    - main: Точка входа и подкоманды CLI
    - ndcore: Полносвязные сети на numpy (прямой/обратный проход, оптимизаторы)
    - ganlosses: Потери GAN и приспособленность потомков
    - annealing: Критерий Метрополиса и охлаждение
    - trainer: Эволюционный цикл обучения генератора
    - theorysim: Симулятор конечной цепи {G_n}
    - bench: Стенд дисбаланса классов
    - experiment: Конфигурация, манифест, запуск и sweep
"""

__version__ = "0.1.0"
__author__ = "AGGAN Lab Team"
