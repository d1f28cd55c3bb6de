"""Валидаторы конфигурации расчета и ролей границ."""

from __future__ import annotations

from typing import TYPE_CHECKING

from hho_hyperelastic.exceptions import ConfigError
from hho_hyperelastic.logging import get_logger

if TYPE_CHECKING:
    from hho_hyperelastic.cases import CaseDefinition, CaseRegistry
    from hho_hyperelastic.config import RunConfig
    from hho_hyperelastic.mesh import Mesh

logger = get_logger("validators")


class ConfigValidator:
    """Валидатор конфигурации расчета относительно реестра случаев.

    Проверяет:
    - Случай существует в реестре
    - Файл сетки существует, если он указан
    - Параметры материала допустимы (mu > 0, lambda > 0)

    Пример использования:
        >>> from hho_hyperelastic.cases import CaseRegistry
        >>> from hho_hyperelastic.config import RunConfig
        >>> validator = ConfigValidator()
        >>> validator.validate(RunConfig(case="annulus"), CaseRegistry.default())  # OK
        >>> validator.validate(RunConfig(case="torus"), CaseRegistry.default())  # Raises ConfigError
    """

    def validate(self, config: "RunConfig", registry: "CaseRegistry") -> None:
        """Валидирует конфигурацию.

        Args:
            config: Конфигурация расчета
            registry: Реестр случаев

        Raises:
            ConfigError: Если конфигурация некорректна
        """
        self._check_case_exists(config, registry)
        self._check_material(config)
        self._check_mesh_file(config)

    def _check_case_exists(self, config: "RunConfig", registry: "CaseRegistry") -> None:
        if config.case not in registry:
            raise ConfigError(f"Unknown case '{config.case}'. Known: {registry.names}")

    def _check_material(self, config: "RunConfig") -> None:
        if config.mu is not None and not config.mu > 0.0:
            raise ConfigError(f"mu must be positive, got {config.mu}")
        if config.lam is not None and not config.lam > 0.0:
            raise ConfigError(f"lambda must be positive, got {config.lam}")

    def _check_mesh_file(self, config: "RunConfig") -> None:
        if config.mesh is not None and not config.mesh.is_file():
            raise ConfigError(f"Mesh file '{config.mesh}' not found")

    def check_order(self, case: "CaseDefinition", k: int) -> None:
        """Предупреждает о k > 1 на сетке с плоской аппроксимацией кривой границы."""
        if case.curved and k > 1:
            logger.warning(
                f"{case.name}: planar faces approximate a curved boundary; "
                f"k = {k} is limited to second-order geometric accuracy"
            )


class BoundaryRoleValidator:
    """Валидатор ролей граничных тегов сетки.

    Каждый тег границы сетки должен иметь ровно одну роль (Дирихле или
    Нейман), и хотя бы одна грань должна быть гранью Дирихле.
    """

    def validate(self, mesh: "Mesh", case: "CaseDefinition") -> None:
        """Проверяет роли тегов.

        Args:
            mesh: Сетка
            case: Расчетный случай

        Raises:
            ConfigError: Если у тега нет роли или граница Дирихле пуста
        """
        roles = case.roles
        missing = sorted(mesh.tags - set(roles))
        if missing:
            tags_str = ", ".join(f"'{t}'" for t in missing)
            raise ConfigError(f"Case '{case.name}': boundary tags without a role: {tags_str}")

        unused = sorted(set(roles) - mesh.tags)
        if unused:
            logger.debug(f"{case.name}: tags not present on the mesh: {unused}")

        if not any(tag in mesh.tags for tag in case.dirichlet):
            raise ConfigError(
                f"Case '{case.name}': no Dirichlet face on the mesh, the problem is not well posed"
            )
