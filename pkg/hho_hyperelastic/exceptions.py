"""Исключения для hho-hyperelastic."""

from __future__ import annotations


class HHOError(Exception):
    """Базовое исключение для всех ошибок hho-hyperelastic.

    Все исключения пакета наследуются от этого класса.
    """

    def __init__(self, message: str) -> None:
        """Инициализирует исключение.

        Args:
            message: Сообщение об ошибке
        """
        super().__init__(message)
        self.message = message


class MeshError(HHOError):
    """Исключение, возникающее при построении или чтении сетки.

    Выбрасывается когда:
    - Файл сетки не читается как файл Gmsh
    - Встречен неподдерживаемый тип элемента
    - Грань принадлежит более чем двум ячейкам (висячие узлы)
    - Ячейка вырождена
    """

    def __init__(self, message: str) -> None:
        """Инициализирует исключение.

        Args:
            message: Описание проблемы с сеткой
        """
        super().__init__(message)


class QuadratureError(HHOError):
    """Исключение для недоступного порядка квадратуры или вырожденной геометрии."""

    def __init__(self, message: str) -> None:
        super().__init__(message)


class FactorizationError(HHOError):
    """Исключение, возникающее при неудачной факторизации локальной матрицы.

    Выбрасывается для матриц масс, блока ячейки при статической конденсации
    и локальных задач реконструкции.
    """

    def __init__(self, message: str, cell: int | None = None) -> None:
        """Инициализирует исключение.

        Args:
            message: Описание ошибки
            cell: Индекс ячейки, в которой произошла ошибка
        """
        super().__init__(message)
        self.cell = cell


class NonPositiveJacobianError(HHOError):
    """Исключение, возникающее при det F <= 0 в точке квадратуры.

    Ошибка восстановимая: решатель Ньютона уменьшает шаг нагрузки.
    """

    def __init__(self, message: str, cell: int | None = None) -> None:
        """Инициализирует исключение.

        Args:
            message: Описание ошибки
            cell: Индекс ячейки, в которой обнаружен det F <= 0
        """
        super().__init__(message)
        self.cell = cell


class LinearSolveError(HHOError):
    """Исключение, возникающее при ошибке решения глобальной системы."""

    def __init__(self, message: str) -> None:
        super().__init__(message)


class ConvergenceError(HHOError):
    """Исключение, возникающее когда метод Ньютона не сошелся.

    Выбрасывается после исчерпания лимита делений шага нагрузки.
    """

    def __init__(
        self,
        message: str,
        case_name: str | None = None,
        load_factor: float | None = None,
    ) -> None:
        """Инициализирует исключение.

        Args:
            message: Описание ошибки
            case_name: Имя расчетного случая
            load_factor: Уровень нагрузки, на котором произошел отказ
        """
        super().__init__(message)
        self.case_name = case_name
        self.load_factor = load_factor


class ConfigError(HHOError):
    """Исключение, возникающее при некорректной конфигурации.

    Выбрасывается когда:
    - Неизвестное имя расчетного случая
    - Граничному тегу не назначена роль или назначено несколько ролей
    - Некорректные значения в конфигурационном файле
    """

    def __init__(self, message: str) -> None:
        """Инициализирует исключение.

        Args:
            message: Описание проблемы с конфигурацией
        """
        super().__init__(message)


class MonitorError(HHOError):
    """Исключение, возникающее при ошибке записи или чтения шагов нагружения."""

    def __init__(self, message: str) -> None:
        """Инициализирует исключение.

        Args:
            message: Описание ошибки
        """
        super().__init__(message)


class ExportError(HHOError):
    """Исключение, возникающее при записи или чтении файлов результатов."""

    def __init__(self, message: str) -> None:
        """Инициализирует исключение.

        Args:
            message: Описание ошибки ввода-вывода
        """
        super().__init__(message)
