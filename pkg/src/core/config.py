# config.py
import os
from dotenv import load_dotenv
from typing import Optional


def setup_environment(env_file: str = ".env") -> bool:
    """
    从.env文件加载环境变量

    Args:
        env_file: .env文件路径

    Returns:
        bool: 是否成功加载
    """
    try:
        if not os.path.exists(env_file):
            print(f"⚠️  警告: {env_file} 文件不存在")
            return False

        load_dotenv(env_file)
        print(f"✅ 已从 {env_file} 加载环境变量")

        # 线程数必须是正整数, 提前校验
        raw = os.getenv("NONLOCAL_FREDHOLM_THREADS")
        if raw is not None and not (raw.isdigit() and int(raw) > 0):
            print(f"❌ NONLOCAL_FREDHOLM_THREADS 必须是正整数, 当前值: {raw}")
            return False

        return True

    except Exception as e:
        print(f"❌ 加载环境变量失败: {e}")
        return False


def get_env_variable(key: str, default: Optional[str] = None) -> str:
    """
    获取环境变量，如果不存在则返回默认值或抛出异常

    Args:
        key: 环境变量名
        default: 默认值

    Returns:
        str: 环境变量值
    """
    value = os.getenv(key, default)
    if value is None:
        raise ValueError(f"环境变量 {key} 未设置")
    return value


_DEFAULT_RULES = os.path.abspath(
    os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "rules", "verification_rules.toml")
)


class Config:
    """配置类"""

    @property
    def threads(self) -> int:
        raw = get_env_variable("NONLOCAL_FREDHOLM_THREADS", "1")
        try:
            value = int(raw)
        except ValueError:
            raise ValueError(f"NONLOCAL_FREDHOLM_THREADS 必须是正整数, 当前值: {raw}")
        if value < 1:
            raise ValueError(f"NONLOCAL_FREDHOLM_THREADS 必须是正整数, 当前值: {raw}")
        return value

    @property
    def log_level(self) -> str:
        return get_env_variable("LOG_LEVEL", "INFO")

    @property
    def rules_path(self) -> str:
        return get_env_variable("NONLOCAL_FREDHOLM_RULES", _DEFAULT_RULES)

    @property
    def out_dir(self) -> str:
        return get_env_variable("NONLOCAL_FREDHOLM_OUT", "./out")


# 创建全局配置实例
config = Config()
